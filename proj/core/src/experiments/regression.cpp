#include "fkan/experiments.hpp"

#include "seeds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace fkan::experiments {

using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

Tensor gather(const std::vector<double>& v, const std::vector<std::size_t>& idx)
{
    Tensor t(idx.size(), 1);
    for (std::size_t i = 0; i < idx.size(); ++i) t[i] = v[idx[i]];
    return t;
}

} // namespace

double regression_target(double x) { return std::sin(std::numbers::pi * x) + 10.0 * std::exp(x / 5.0); }

RegressionDataset make_regression_dataset(std::uint64_t seed, std::size_t points, bool noise, double test_fraction)
{
    RegressionDataset d;
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::normal_distribution<double> eps;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = points == 1 ? -2.0 : -2.0 + 3.0 * static_cast<double>(i) / static_cast<double>(points - 1);
        d.x.push_back(x);
        d.y.push_back(regression_target(x) + (noise ? eps(rng) / 100.0 : 0.0));
    }
    std::vector<std::size_t> order(points);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(points)));
    d.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    d.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(d.test.begin(), d.test.end());
    std::sort(d.train.begin(), d.train.end());
    return d;
}

RegressionResult run_regression(const RegressionOptions& o, std::uint64_t seed)
{
    const auto start = std::chrono::steady_clock::now();
    const RegressionDataset data = make_regression_dataset(seed, o.points, o.noise);

    nn::NetworkSpec spec;
    spec.architecture = nn::Architecture::Sequential;
    spec.widths.push_back(1);
    for (std::size_t l = 0; l < o.layers; ++l) spec.widths.push_back(o.neurons);
    spec.widths.push_back(1);
    spec.activation = o.activation;
    if (o.activation == nn::Activation::Fjnb) spec.degrees = {o.degree};
    nn::Network net(spec, derive_seed(seed, 2));

    const Tensor xtr = gather(data.x, data.train);
    const Tensor ytr = gather(data.y, data.train);
    optim::Adam adam(net.parameters(), {o.learning_rate});
    optim::EarlyStopping stopper(o.patience);

    RegressionResult res;
    for (std::size_t it = 1; it <= o.max_iterations; ++it) {
        Graph g;
        const auto bound = net.parameters().bind(g);
        const Var pred = net.forward(g, bound, g.input(xtr));
        const Var loss = ad::mean(ad::square(pred - g.constant(ytr)));
        g.backward(loss, false);
        adam.step(net.parameters(), nn::gather_gradient(g, bound));
        res.iterations = it;
        if (o.trace_params && net.fjnb_count() > 0) {
            const nn::EffectiveParams e = net.effective(0);
            res.param_trace.push_back({it, e.alpha, e.beta, e.gamma, loss.item()});
        }
        if (o.patience > 0 && stopper.update(loss.item())) break;
    }

    const Tensor all = net.predict(Tensor::column(data.x));
    std::vector<double> pt, yt;
    for (std::size_t i : data.test) {
        pt.push_back(all[i]);
        yt.push_back(data.y[i]);
    }
    const ErrorStats test = compare(pt, yt);
    std::vector<double> ptr, ytr_v;
    for (std::size_t i : data.train) {
        ptr.push_back(all[i]);
        ytr_v.push_back(data.y[i]);
    }
    res.train_mse = compare(ptr, ytr_v).mse;

    std::string name = "regress-" + std::string(nn::activation_name(o.activation));
    if (o.activation == nn::Activation::Fjnb) name += std::to_string(o.degree);
    res.metrics = {name, seed, test.mae, test.mse, test.max_abs, std::nullopt, 0.0};
    res.solution.columns = {"zeta", "prediction", "exact", "abs_err"};
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        res.solution.rows.push_back({data.x[i], all[i], data.y[i], std::abs(all[i] - data.y[i])});
    }
    res.metrics.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void write_param_trace(std::ostream& out, std::span<const ParamTraceRow> trace)
{
    out << "iter,alpha_eff,beta_eff,gamma_eff,loss\n";
    char buf[160];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.alpha, r.beta, r.gamma,
                      r.loss);
        out << buf;
    }
}

bool params_converged(std::span<const ParamTraceRow> trace, std::size_t window, double tolerance)
{
    if (trace.size() < window || window == 0) return false;
    const auto tail = trace.subspan(trace.size() - window);
    auto spread = [&](auto field) {
        double lo = field(tail[0]), hi = lo;
        for (const auto& r : tail) {
            lo = std::min(lo, field(r));
            hi = std::max(hi, field(r));
        }
        return hi - lo;
    };
    return spread([](const ParamTraceRow& r) { return r.alpha; }) < tolerance &&
           spread([](const ParamTraceRow& r) { return r.beta; }) < tolerance &&
           spread([](const ParamTraceRow& r) { return r.gamma; }) < tolerance;
}

std::vector<TimingRow> run_activation_timing(std::size_t size, std::size_t repetitions, std::uint64_t seed)
{
    std::mt19937_64 rng(derive_seed(seed, 3));
    std::normal_distribution<double> n;
    Tensor x(size, size);
    for (double& v : x.data()) v = n(rng);

    struct Entry {
        std::string name;
        std::function<Var(Graph&, Var)> apply;
    };
    std::vector<Entry> entries;
    for (nn::Activation a : {nn::Activation::Sigmoid, nn::Activation::Tanh, nn::Activation::Relu,
                             nn::Activation::LeakyRelu, nn::Activation::Elu, nn::Activation::Selu,
                             nn::Activation::Gelu, nn::Activation::Silu, nn::Activation::Softplus}) {
        entries.push_back({std::string(nn::activation_name(a)), [a](Graph&, Var v) { return nn::apply_activation(a, v); }});
    }
    for (unsigned q = 2; q <= 6; ++q) {
        Tensor theta(q + 1, size);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : theta.data()) v = u(rng);
        entries.push_back({"fjnb" + std::to_string(q), [q, theta](Graph& g, Var v) {
                               const nn::FjnbVars b{g.parameter(Tensor::scalar(0.0)), g.parameter(Tensor::scalar(0.0)),
                                                    g.parameter(Tensor::scalar(0.0)), g.parameter(theta), q};
                               return nn::fjnb_forward(b, v);
                           }});
    }

    std::vector<TimingRow> rows;
    for (const auto& e : entries) {
        std::vector<double> ms;
        for (std::size_t r = 0; r < repetitions; ++r) {
            Graph g;
            const Var v = g.constant(x);
            const auto t0 = std::chrono::steady_clock::now();
            const Var y = e.apply(g, v);
            const auto t1 = std::chrono::steady_clock::now();
            (void)y;
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
        double var = 0.0;
        for (double m : ms) var += (m - mean) * (m - mean);
        const double sd = ms.size() > 1 ? std::sqrt(var / static_cast<double>(ms.size() - 1)) : 0.0;
        rows.push_back({e.name, mean, sd});
    }
    return rows;
}

void write_timing(std::ostream& out, std::span<const TimingRow> rows)
{
    out << "activation,mean_ms,stddev_ms\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f\n", r.activation.c_str(), r.mean_ms, r.stddev_ms);
        out << buf;
    }
}

} // namespace fkan::experiments
