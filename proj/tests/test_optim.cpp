#include "fkan/error.hpp"
#include "fkan/optim.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace fkan;
using namespace fkan::optim;
using ad::Tensor;

namespace {

nn::ParameterSet scalars(std::initializer_list<double> values)
{
    nn::ParameterSet p;
    int k = 0;
    for (double v : values) p.add("p" + std::to_string(k++), Tensor::scalar(v));
    return p;
}

double rosenbrock(std::span<const double> x, std::span<double> g)
{
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

} // namespace

TEST(Adam, ZeroGradientLeavesParameters)
{
    auto p = scalars({1.5, -2.0});
    Adam adam(p, {0.01});
    const std::vector<double> g{0.0, 0.0};
    for (int i = 0; i < 5; ++i) adam.step(p, g);
    EXPECT_EQ(p.flatten(), (std::vector<double>{1.5, -2.0}));
    EXPECT_EQ(adam.step_count(), 5u);
}

TEST(Adam, FirstStepIsLearningRate)
{
    auto p = scalars({0.0});
    Adam adam(p, {0.01});
    const std::vector<double> g{1.0};
    adam.step(p, g);
    // m_hat = 1, v_hat = 1: step = lr / (1 + eps)
    EXPECT_NEAR(p[0].value.item(), -0.01 / (1.0 + 1e-8), 1e-17);
    adam.step(p, g);
    EXPECT_NEAR(p[0].value.item(), -0.02, 1e-9);
}

TEST(Adam, EntriesUpdateIndependently)
{
    auto both = scalars({0.3, -0.7});
    auto first = scalars({0.3});
    auto second = scalars({-0.7});
    Adam a(both, {0.05}), b(first, {0.05}), c(second, {0.05});
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    for (int i = 0; i < 50; ++i) {
        const double g0 = n(rng), g1 = 100 * n(rng);
        a.step(both, std::vector<double>{g0, g1});
        b.step(first, std::vector<double>{g0});
        c.step(second, std::vector<double>{g1});
    }
    EXPECT_EQ(both[0].value.item(), first[0].value.item());
    EXPECT_EQ(both[1].value.item(), second[0].value.item());
}

TEST(Adam, MomentShapesFollowParameters)
{
    nn::ParameterSet p;
    p.add("w", Tensor(3, 4));
    p.add("b", Tensor(1, 4));
    Adam adam(p);
    ASSERT_EQ(adam.first_moment().size(), 2u);
    EXPECT_EQ(adam.first_moment()[0].shape(), (ad::Shape{3, 4}));
    EXPECT_EQ(adam.second_moment()[1].shape(), (ad::Shape{1, 4}));
}

TEST(Adam, NonFiniteGradientNamesParameter)
{
    nn::ParameterSet p;
    p.add("layer.weight", Tensor(2, 2));
    p.add("layer.bias", Tensor(1, 2));
    Adam adam(p);
    std::vector<double> g(6, 0.1);
    g[5] = std::nan("");
    try {
        adam.step(p, g);
        FAIL();
    } catch (const NonFiniteError& e) {
        EXPECT_NE(std::string(e.what()).find("layer.bias"), std::string::npos);
        EXPECT_EQ(e.index(), 1u);
    }
    EXPECT_EQ(adam.step_count(), 0u);
    EXPECT_EQ(p.flatten(), std::vector<double>(6, 0.0));
}

TEST(Adam, RespectsBounds)
{
    nn::ParameterSet p;
    p.add("a", Tensor::scalar(0.0), -0.05, 1.0);
    Adam adam(p, {0.01});
    for (int i = 0; i < 100; ++i) adam.step(p, std::vector<double>{1e3});
    EXPECT_EQ(p[0].value.item(), -0.05);
}

TEST(EarlyStopping, DecreasingNeverStops)
{
    EarlyStopping es(3);
    for (int i = 0; i < 100; ++i) EXPECT_FALSE(es.update(100.0 - i));
}

TEST(EarlyStopping, PlateauStopsAfterPatience)
{
    EarlyStopping es(3);
    EXPECT_FALSE(es.update(1.0));
    EXPECT_FALSE(es.update(1.0));
    EXPECT_FALSE(es.update(1.0));
    EXPECT_TRUE(es.update(1.0));
}

TEST(EarlyStopping, ImprovementResetsCounter)
{
    EarlyStopping es(2);
    es.update(1.0);
    es.update(1.0);
    EXPECT_EQ(es.since_improvement(), 1u);
    EXPECT_FALSE(es.update(0.5));
    EXPECT_EQ(es.since_improvement(), 0u);
    EXPECT_FALSE(es.update(0.6));
    EXPECT_TRUE(es.update(0.6));
}

TEST(Lbfgs, QuadraticConvergesQuickly)
{
    const std::vector<double> c{1.0, -2.0, 3.5, 0.25};
    const Objective f = [&](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            g[i] = x[i] - c[i];
            v += 0.5 * g[i] * g[i];
        }
        return v;
    };
    const auto r = lbfgs_minimize(f, {10.0, 10.0, -7.0, 0.0});
    EXPECT_EQ(r.status, LbfgsStatus::Converged);
    EXPECT_LE(r.trace.size() - 1, 10u);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(r.x[i], c[i], 1e-8);
}

TEST(Lbfgs, CurvaturePairsKeptAtTinyScale)
{
    // Ill-conditioned quadratic scaled to loss ~1e-12: s'y is far below any
    // fixed floor, yet every pair carries valid curvature.
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double c = 1e-12 * std::pow(10.0, static_cast<double>(i));
            g[i] = c * x[i];
            v += 0.5 * c * x[i] * x[i];
        }
        return v;
    };
    LbfgsOptions opt;
    opt.gradient_tolerance = 1e-22;
    opt.max_iterations = 200;
    const auto r = lbfgs_minimize(f, {1.0, 1.0, 1.0, 1.0, 1.0}, opt);
    EXPECT_EQ(r.status, LbfgsStatus::Converged);
    EXPECT_EQ(r.skipped_pairs, 0u);
    EXPECT_LE(r.trace.size() - 1, 60u);
}

TEST(Lbfgs, Rosenbrock)
{
    LbfgsOptions opt;
    opt.max_iterations = 200;
    const auto r = lbfgs_minimize(rosenbrock, {-1.2, 1.0}, opt);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    EXPECT_LE(r.trace.size() - 1, 200u);
    for (const TraceRow& row : r.trace) EXPECT_TRUE(row.sufficient_decrease) << row.iteration;
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LT(r.trace[i].loss, r.trace[i - 1].loss);
}

TEST(Lbfgs, ZeroGradientStartReturnsImmediately)
{
    const auto r = lbfgs_minimize(rosenbrock, {1.0, 1.0});
    EXPECT_EQ(r.status, LbfgsStatus::Converged);
    EXPECT_EQ(status_name(r.status), "converged");
    EXPECT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.evaluations, 1u);
}

TEST(Lbfgs, NonFiniteInitialLossThrows)
{
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        g[0] = 1.0;
        return std::log(x[0]);
    };
    EXPECT_THROW((void)lbfgs_minimize(f, {-1.0}), NonFiniteError);
}

TEST(Lbfgs, LineSearchFailureIsAStatus)
{
    // Gradient points the wrong way: no step decreases the loss.
    const Objective f = [](std::span<const double> x, std::span<double> g) {
        g[0] = -1.0;
        return x[0];
    };
    const auto r = lbfgs_minimize(f, {0.0});
    EXPECT_EQ(r.status, LbfgsStatus::LineSearchFailed);
    EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Lbfgs, CallbackCanStop)
{
    const auto r = lbfgs_minimize(rosenbrock, {-1.2, 1.0}, {},
                                  [](const TraceRow& row, std::span<const double>) { return row.iteration < 3; });
    EXPECT_EQ(r.status, LbfgsStatus::Stopped);
    EXPECT_EQ(r.trace.size(), 4u);
}

TEST(Lbfgs, UnboundedHistoryMatchesDenseBfgs)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    for (int dim = 2; dim <= 5; ++dim) {
        Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(dim, dim, [&] { return n(rng); });
        const Eigen::MatrixXd a = m * m.transpose() + Eigen::MatrixXd::Identity(dim, dim);
        const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(dim, [&] { return n(rng); });
        const Objective f = [&](std::span<const double> x, std::span<double> g) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim);
            Eigen::Map<Eigen::VectorXd> gv(g.data(), dim);
            gv = a * xv - b;
            return 0.5 * xv.dot(a * xv) - b.dot(xv);
        };
        LbfgsOptions opt;
        opt.history = 1000;
        opt.scale_initial_hessian = false;
        opt.max_iterations = 6;
        opt.gradient_tolerance = 0.0;
        std::vector<double> x0(dim, 1.0);
        const auto r = lbfgs_minimize(f, x0, opt);

        // Dense inverse-Hessian BFGS from H0 = I with the same line search.
        Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
        std::vector<double> x = x0, g(dim);
        double fx = f(x, g);
        for (std::size_t it = 1; it < r.trace.size(); ++it) {
            const Eigen::Map<Eigen::VectorXd> gv(g.data(), dim);
            const Eigen::VectorXd d = -h * gv;
            const double a0 = it == 1 ? std::min(1.0, 1.0 / std::max(1.0, infinity_norm(g))) : 1.0;
            const auto ls = line_search(f, x, fx, g, std::vector<double>(d.data(), d.data() + dim), a0);
            ASSERT_TRUE(ls.ok);
            const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(ls.x.data(), dim) -
                                      Eigen::Map<const Eigen::VectorXd>(x.data(), dim);
            const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ls.grad.data(), dim) - gv;
            const double rho = 1.0 / s.dot(y);
            const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(dim, dim);
            h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
            x = ls.x;
            g = ls.grad;
            fx = ls.loss;
            EXPECT_NEAR(r.trace[it].loss, fx, 1e-10 * (1 + std::abs(fx))) << "dim " << dim << " it " << it;
        }
        for (int i = 0; i < dim; ++i) EXPECT_NEAR(r.x[i], x[i], 1e-8);
    }
}

TEST(LossTrace, CsvHeaderAndRows)
{
    const auto r = lbfgs_minimize(rosenbrock, {-1.2, 1.0});
    std::ostringstream os;
    write_loss_trace(os, r.trace);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "iteration,loss,gradient_norm");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, r.trace.size());
}
