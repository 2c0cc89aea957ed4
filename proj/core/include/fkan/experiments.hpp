#pragma once

// The benchmark problems: synthetic regression, activation timing,
// Lane-Emden, Burgers and a fractional delay equation.

#include "fkan/network.hpp"
#include "fkan/optim.hpp"
#include "fkan/pinn.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fkan::experiments {

struct Metrics {
    std::string experiment;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double mse = 0.0;
    double max_abs = 0.0;
    std::optional<double> first_root;
    double wall_ms = 0.0;
};

/// experiment,seed,mae,mse,max_abs,first_root,wall_ms. first_root is empty
/// when there is none; wall_ms is empty unless requested, which keeps
/// repeated runs byte-identical.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const Metrics& m, bool with_wall_time);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
void write_table(std::ostream& out, const Table& table);

struct ErrorStats {
    double mae = 0.0;
    double mse = 0.0;
    double max_abs = 0.0;
};
ErrorStats compare(std::span<const double> prediction, std::span<const double> exact);

/// Smallest positive root of f, located by a sign change between
/// consecutive grid values and refined by bisection.
std::optional<double> first_root(const std::function<double(double)>& f, std::span<const double> grid,
                                 double tolerance = 1e-13);

// --- regression --------------------------------------------------------------

double regression_target(double x);

struct RegressionDataset {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Equidistant points on [-2, 1], target + N(0,1)/100 noise, seeded
/// shuffle into train and test.
RegressionDataset make_regression_dataset(std::uint64_t seed, std::size_t points = 50, bool noise = true,
                                          double test_fraction = 0.33);

struct RegressionOptions {
    nn::Activation activation = nn::Activation::Fjnb;
    unsigned degree = 6;
    std::size_t layers = 1;
    std::size_t neurons = 5;
    double learning_rate = 0.01;
    std::size_t max_iterations = 500;
    std::size_t patience = 200; // 0 disables early stopping
    std::size_t points = 50;
    bool noise = true;
    bool trace_params = false;
};

struct ParamTraceRow {
    std::size_t iteration;
    double alpha;
    double beta;
    double gamma;
    double loss;
};

struct RegressionResult {
    Metrics metrics; // test-set errors
    double train_mse = 0.0;
    std::size_t iterations = 0;
    Table solution; // every point: zeta,prediction,exact,abs_err
    std::vector<ParamTraceRow> param_trace;
};

RegressionResult run_regression(const RegressionOptions& options, std::uint64_t seed);

/// iter,alpha_eff,beta_eff,gamma_eff,loss
void write_param_trace(std::ostream& out, std::span<const ParamTraceRow> trace);

/// Largest change of any effective parameter over the final `window` rows
/// is below `tolerance`.
bool params_converged(std::span<const ParamTraceRow> trace, std::size_t window = 50, double tolerance = 1e-3);

struct TimingRow {
    std::string activation;
    double mean_ms;
    double stddev_ms;
};

/// Forward evaluation time of every activation (and fjnb degrees 2..6) on
/// a random size x size matrix.
std::vector<TimingRow> run_activation_timing(std::size_t size, std::size_t repetitions, std::uint64_t seed);
void write_timing(std::ostream& out, std::span<const TimingRow> rows);

// --- physics-informed problems ---------------------------------------------------

struct PinnOptions {
    std::size_t max_iterations = 0; // 0: problem default
    std::size_t points = 0;         // 0: problem default
    std::vector<std::size_t> widths; // empty: problem default
    std::vector<unsigned> degrees;   // empty: 1..6
    std::size_t history = 100;
    bool verbose = false;
};

struct PinnResult {
    Metrics metrics;
    std::string status;
    double final_loss = 0.0;
    std::size_t iterations = 0;
    Table solution;
    Table residual;
    std::vector<optim::TraceRow> loss_trace;
};

/// Upper end of the training interval for each m.
double lane_emden_domain(unsigned m);
/// Published first roots for m = 0..4.
std::optional<double> lane_emden_table_root(unsigned m);
/// Closed forms for m = 0, 1, 5.
std::optional<double> lane_emden_exact(unsigned m, double z);
/// High-accuracy integration of the initial value problem at sorted,
/// non-negative points.
std::vector<double> lane_emden_reference(unsigned m, std::span<const double> z);
std::optional<double> lane_emden_reference_root(unsigned m, double domain);

/// Residual chi'' + 2 chi' / z + chi^m on z_i = i L / points (i >= 1) and
/// penalties chi(0) - 1, chi'(0).
pinn::Problem lane_emden_problem(unsigned m, double domain, std::size_t points);
nn::NetworkSpec lane_emden_network(unsigned m, const PinnOptions& options);
PinnResult run_lane_emden(unsigned m, std::uint64_t seed, const PinnOptions& options = {});

struct BurgersParams {
    double m0 = 1.0;
    double m1 = 0.01;
    double m2 = 0.1;
};

double burgers_exact(const BurgersParams& p, double zeta, double tau);
/// Residual chi_t + m0 chi chi_z + m1 chi_zz on an n x n grid over [0,1]^2
/// (rows ordered zeta-major), with the initial slice and both spatial
/// boundaries pinned to the exact solution.
pinn::Problem burgers_problem(const BurgersParams& p, std::size_t n);
nn::NetworkSpec burgers_network(const PinnOptions& options);
PinnResult run_burgers(const BurgersParams& p, std::uint64_t seed, const PinnOptions& options = {});

inline constexpr double kDelayOrder = 0.3;
/// 1 - 3z + 3z^2 + 2000 z^2.7 / (1071 Gamma(0.7))
double delay_forcing(double z);
/// Residual D^0.3 chi(z) - [chi(z - 1) - chi(z) + f(z)] on z_i = i / n,
/// i = 0..n, and the penalty chi(0).
pinn::Problem delay_problem(std::size_t n);
nn::NetworkSpec delay_network(const PinnOptions& options);
PinnResult run_delay_fde(std::uint64_t seed, const PinnOptions& options = {});

} // namespace fkan::experiments
