#include "fkan/experiments.hpp"
#include "fkan/jacobi.hpp"
#include "fkan/network.hpp"
#include "fkan/optim.hpp"
#include "fkan/pinn.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fkan;

namespace {

std::vector<double> points(std::size_t n)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> z(n);
    for (auto& v : z) v = u(rng);
    return z;
}

void BM_JacobiEvalAll(benchmark::State& state)
{
    const auto z = points(10000);
    const auto degree = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(jacobi::eval_all({0.5, 1.5}, degree, z));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * z.size()));
}
BENCHMARK(BM_JacobiEvalAll)->DenseRange(2, 8, 2);

nn::Network fjnb_net(unsigned degree)
{
    nn::NetworkSpec spec;
    spec.widths = {1, 32, 1};
    spec.degrees = {degree};
    return nn::Network(spec, 3);
}

void BM_FjnbForward(benchmark::State& state)
{
    const auto net = fjnb_net(static_cast<unsigned>(state.range(0)));
    const auto x = ad::Tensor::column(points(1000));
    for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
}
BENCHMARK(BM_FjnbForward)->DenseRange(2, 6, 2);

void BM_FjnbBackward(benchmark::State& state)
{
    const auto net = fjnb_net(static_cast<unsigned>(state.range(0)));
    const auto x = ad::Tensor::column(points(1000));
    for (auto _ : state) {
        ad::Graph g;
        const auto bound = net.parameters().bind(g);
        const ad::Var loss = ad::sum(ad::square(net.forward(g, bound, g.input(x))));
        g.backward(loss, false);
        benchmark::DoNotOptimize(nn::gather_gradient(g, bound));
    }
}
BENCHMARK(BM_FjnbBackward)->DenseRange(2, 6, 2);

void BM_LaneEmdenLossAndGradient(benchmark::State& state)
{
    const experiments::PinnOptions o;
    const auto problem = experiments::lane_emden_problem(1, experiments::lane_emden_domain(1), 1500);
    const nn::Network net(experiments::lane_emden_network(1, o), 5);
    std::vector<double> grad;
    for (auto _ : state) benchmark::DoNotOptimize(pinn::loss_and_gradient(net, problem, &grad));
}
BENCHMARK(BM_LaneEmdenLossAndGradient)->Unit(benchmark::kMillisecond);

void BM_CaputoMatrix(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(pinn::caputo_l1_matrix(0.3, n, 1.0 / static_cast<double>(n)));
}
BENCHMARK(BM_CaputoMatrix)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_LbfgsRosenbrock(benchmark::State& state)
{
    const optim::Objective rosen = [](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
            f += 100 * a * a + b * b;
            g[i] += -400 * a * x[i] - 2 * b;
            g[i + 1] += 200 * a;
        }
        return f;
    };
    const std::vector<double> x0(static_cast<std::size_t>(state.range(0)), -1.2);
    for (auto _ : state) benchmark::DoNotOptimize(optim::lbfgs_minimize(rosen, x0));
}
BENCHMARK(BM_LbfgsRosenbrock)->Arg(10)->Arg(100);

} // namespace

BENCHMARK_MAIN();
