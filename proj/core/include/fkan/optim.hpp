#pragma once

#include "fkan/parameters.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace fkan::optim {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam over a ParameterSet. Moments mirror the parameter
/// shapes; the update is elementwise, so entries never interact.
class Adam {
  public:
    explicit Adam(const nn::ParameterSet& params, AdamOptions options = {});

    /// grads is flat in parameter order (see nn::gather_gradient). Throws
    /// NonFiniteError naming the parameter on NaN/inf gradients; nothing
    /// is modified in that case. Results are clamped to parameter bounds.
    void step(nn::ParameterSet& params, std::span<const double> grads);

    [[nodiscard]] std::uint64_t step_count() const noexcept { return steps_; }
    [[nodiscard]] const AdamOptions& options() const noexcept { return options_; }
    [[nodiscard]] const std::vector<ad::Tensor>& first_moment() const noexcept { return m_; }
    [[nodiscard]] const std::vector<ad::Tensor>& second_moment() const noexcept { return v_; }

  private:
    AdamOptions options_;
    std::uint64_t steps_ = 0;
    std::vector<ad::Tensor> m_;
    std::vector<ad::Tensor> v_;
};

/// Stops after `patience` consecutive updates without strict improvement.
class EarlyStopping {
  public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Returns true when training should stop.
    bool update(double loss);

    [[nodiscard]] double best() const noexcept { return best_; }
    [[nodiscard]] std::size_t since_improvement() const noexcept { return since_; }
    [[nodiscard]] std::size_t patience() const noexcept { return patience_; }

  private:
    std::size_t patience_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t since_ = 0;
};

/// Fills grad (same size as x) and returns the loss.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LineSearchOptions {
    double c1 = 1e-4; // sufficient decrease
    double c2 = 0.9;  // curvature
    double max_step = 1e10;
    std::size_t max_evaluations = 25;
};

struct LineSearchResult {
    bool ok = false;
    bool wolfe = false; // strong curvature condition met as well
    double step = 0.0;
    double loss = 0.0;
    std::vector<double> x;
    std::vector<double> grad;
    std::size_t evaluations = 0;
};

/// Bracketing and zoom search along d from x (loss f, gradient g). Any
/// returned step with ok == true satisfies sufficient decrease.
LineSearchResult line_search(const Objective& objective, std::span<const double> x, double f, std::span<const double> g,
                             std::span<const double> d, double initial_step, const LineSearchOptions& options = {});

enum class LbfgsStatus : std::uint8_t { Converged, MaxIterations, LineSearchFailed, Stopped };

std::string_view status_name(LbfgsStatus status) noexcept;

struct LbfgsOptions {
    std::size_t history = 10;
    std::size_t max_iterations = 500;
    double gradient_tolerance = 1e-8; // on the infinity norm
    double initial_step = 1.0;
    /// Scales the initial inverse Hessian by s'y / y'y of the newest pair.
    bool scale_initial_hessian = true;
    /// Pairs with s'y <= curvature_floor * y'y are dropped.
    double curvature_floor = std::numeric_limits<double>::epsilon();
    LineSearchOptions line_search{};
};

struct TraceRow {
    std::size_t iteration = 0;
    double loss = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
    std::size_t evaluations = 0;
    bool sufficient_decrease = true;
};

struct LbfgsResult {
    std::vector<double> x;
    double loss = 0.0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    std::vector<TraceRow> trace; // row 0 is the starting point
    std::size_t evaluations = 0;
    std::size_t skipped_pairs = 0;
};

/// Called after every accepted step; returning false stops the run.
using IterationCallback = std::function<bool(const TraceRow&, std::span<const double> x)>;

/// Throws NonFiniteError if the loss or gradient at x0 is not finite.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsOptions& options = {},
                           const IterationCallback& callback = {});

double infinity_norm(std::span<const double> v) noexcept;

/// CSV with header iteration,loss,gradient_norm.
void write_loss_trace(std::ostream& out, std::span<const TraceRow> trace);

} // namespace fkan::optim
