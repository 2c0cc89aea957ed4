#include "oracles.hpp"

#include "fkan/experiments.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace fkan;
using namespace fkan::experiments;

TEST(RegressionDataset, SplitIsDisjointAndCovering)
{
    const auto d = make_regression_dataset(4);
    ASSERT_EQ(d.x.size(), 50u);
    EXPECT_EQ(d.test.size(), 17u);
    std::set<std::size_t> all(d.train.begin(), d.train.end());
    for (std::size_t i : d.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), 50u);
    EXPECT_DOUBLE_EQ(d.x.front(), -2.0);
    EXPECT_DOUBLE_EQ(d.x.back(), 1.0);
}

TEST(RegressionDataset, SeedReproducible)
{
    const auto a = make_regression_dataset(9), b = make_regression_dataset(9), c = make_regression_dataset(10);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(a.y, c.y);
}

TEST(RegressionDataset, NoiseIsSmall)
{
    const auto d = make_regression_dataset(2);
    const auto clean = make_regression_dataset(2, 50, false);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        EXPECT_DOUBLE_EQ(clean.y[i], regression_target(clean.x[i]));
        EXPECT_LT(std::abs(d.y[i] - clean.y[i]), 0.06);
    }
}

TEST(Regression, UnknownActivationListsOptions)
{
    try {
        (void)nn::parse_activation("swish");
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("sigmoid"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("softplus"), std::string::npos);
    }
}

TEST(Regression, NoiselessCapacity)
{
    RegressionOptions o;
    o.noise = false;
    o.max_iterations = 5000;
    o.patience = 0;
    for (std::uint64_t seed : {1, 2, 3}) EXPECT_LT(run_regression(o, seed).train_mse, 1e-3) << seed;
}

TEST(Regression, ParameterTrace)
{
    RegressionOptions o;
    o.points = 250;
    o.patience = 0;
    o.max_iterations = 500;
    o.trace_params = true;
    const auto r = run_regression(o, 3);
    ASSERT_EQ(r.param_trace.size(), 500u);
    for (const auto& row : r.param_trace) {
        EXPECT_GT(row.gamma, 0.0);
        EXPECT_LT(row.gamma, 1.0);
        EXPECT_GT(row.alpha, -1.0);
        EXPECT_GT(row.beta, -1.0);
    }
    EXPECT_TRUE(params_converged(r.param_trace, 50, 1e-2));
    std::ostringstream os;
    write_param_trace(os, r.param_trace);
    EXPECT_EQ(os.str().rfind("iter,alpha_eff,beta_eff,gamma_eff,loss\n", 0), 0u);
}

TEST(Regression, Deterministic)
{
    RegressionOptions o;
    o.max_iterations = 50;
    const auto a = run_regression(o, 5), b = run_regression(o, 5);
    EXPECT_EQ(a.metrics.mae, b.metrics.mae);
    EXPECT_EQ(a.solution.rows, b.solution.rows);
}

TEST(Timing, SmallRun)
{
    const auto rows = run_activation_timing(32, 3, 1);
    ASSERT_EQ(rows.size(), 14u);
    EXPECT_EQ(rows.back().activation, "fjnb6");
    for (const auto& r : rows) {
        EXPECT_GE(r.mean_ms, 0.0);
        EXPECT_GE(r.stddev_ms, 0.0);
    }
}

TEST(FirstRoot, AnalyticLaneEmdenZero)
{
    std::vector<double> grid(1501);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 3.0 * static_cast<double>(i) / 1500.0;
    const auto root = first_root([](double z) { return 1.0 - z * z / 6.0; }, grid);
    ASSERT_TRUE(root);
    EXPECT_NEAR(*root, std::sqrt(6.0), 1e-10);
}

TEST(FirstRoot, NoneWithoutSignChange)
{
    const std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
    EXPECT_FALSE(first_root([](double z) { return 1.0 / std::sqrt(1 + z * z / 3); }, grid));
}

TEST(LaneEmden, ReferenceRootsMatchTable)
{
    const double table[] = {2.44948974, 3.14159265, 4.35287460, 6.89684860, 14.9715463};
    for (unsigned m = 0; m <= 4; ++m) {
        ASSERT_TRUE(lane_emden_table_root(m));
        EXPECT_EQ(*lane_emden_table_root(m), table[m]);
        const auto root = lane_emden_reference_root(m, lane_emden_domain(m));
        ASSERT_TRUE(root);
        EXPECT_NEAR(*root, table[m], 1e-7);
        EXPECT_LT(table[m], lane_emden_domain(m));
    }
    EXPECT_FALSE(lane_emden_table_root(5));
    EXPECT_FALSE(lane_emden_reference_root(5, lane_emden_domain(5)));
}

TEST(LaneEmden, ReferenceMatchesClosedForms)
{
    std::vector<double> z;
    for (int i = 0; i <= 50; ++i) z.push_back(0.06 * i);
    for (unsigned m : {0u, 1u, 5u}) {
        const auto ref = lane_emden_reference(m, z);
        for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(ref[i], *lane_emden_exact(m, z[i]), 1e-10);
    }
}

TEST(LaneEmden, OracleLoss)
{
    for (unsigned m : {0u, 1u, 5u}) {
        const auto p = lane_emden_problem(m, lane_emden_domain(m), 1500);
        EXPECT_LT(oracle::oracle_loss(p, oracle::lane_emden_oracle(m)), 1e-8) << "m=" << m;
    }
}

TEST(Burgers, InitialSlice)
{
    for (const BurgersParams p : {BurgersParams{1, 0.01, 0.1}, BurgersParams{0.1, 0.0001, 0.5}}) {
        for (double z : {0.0, 0.25, 0.5, 1.0})
            EXPECT_DOUBLE_EQ(burgers_exact(p, z, 0.0), p.m2 / p.m0 + 2 * (p.m1 / p.m0) * std::tanh(z));
    }
}

TEST(Burgers, OracleLoss)
{
    for (const BurgersParams p : {BurgersParams{1, 0.01, 0.1}, BurgersParams{0.1, 0.0001, 0.5}})
        EXPECT_LT(oracle::oracle_loss(burgers_problem(p, 100), oracle::burgers_oracle(p)), 1e-10);
}

TEST(Delay, CoefficientIdentity)
{
    const double lhs = 6.0 / std::tgamma(3.7);
    const double rhs = 2000.0 / (1071.0 * std::tgamma(0.7));
    EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-12);
}

TEST(Delay, ForcingMatchesOracleEquation)
{
    // D^0.3 z^3 = z^3 applied to the delayed term (z-1)^3 - z^3 + f(z)
    for (double z : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        const double caputo = 6.0 / std::tgamma(3.7) * std::pow(z, 2.7);
        EXPECT_NEAR(caputo, std::pow(z - 1, 3) - std::pow(z, 3) + delay_forcing(z), 1e-13);
    }
}

TEST(Delay, OracleLossFloor)
{
    EXPECT_LT(oracle::oracle_loss(delay_problem(2000), oracle::delay_oracle()), 1e-8);
}

TEST(Delay, ZeroNetworkError)
{
    std::vector<double> zero(1001, 0.0), exact(1001);
    for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = std::pow(static_cast<double>(i) / 1000.0, 3);
    EXPECT_DOUBLE_EQ(compare(zero, exact).max_abs, 1.0);
}

TEST(Metrics, CsvFormat)
{
    std::ostringstream os;
    write_metrics_header(os);
    write_metrics_row(os, {"x", 3, 0.5, 0.25, 1.0, std::nullopt, 12.5}, false);
    write_metrics_row(os, {"x", 3, 0.5, 0.25, 1.0, 2.5, 12.5}, true);
    EXPECT_EQ(os.str(), "experiment,seed,mae,mse,max_abs,first_root,wall_ms\n"
                        "x,3,0.5,0.25,1,,\n"
                        "x,3,0.5,0.25,1,2.5,12.5\n");
}

TEST(Pinn, ShortRunsAreFiniteAndDeterministic)
{
    PinnOptions o;
    o.max_iterations = 5;
    o.points = 20;
    const auto a = run_lane_emden(2, 1, o), b = run_lane_emden(2, 1, o);
    EXPECT_EQ(a.metrics.max_abs, b.metrics.max_abs);
    EXPECT_TRUE(std::isfinite(a.metrics.mae));
    EXPECT_EQ(a.solution.rows.size(), 21u);

    const auto burgers = run_burgers({}, 1, o);
    EXPECT_EQ(burgers.solution.rows.size(), 10000u);
    EXPECT_TRUE(std::isfinite(burgers.metrics.max_abs));

    const auto delay = run_delay_fde(1, o);
    EXPECT_EQ(delay.solution.rows.size(), 1001u);
    EXPECT_TRUE(std::isfinite(delay.metrics.max_abs));
}
