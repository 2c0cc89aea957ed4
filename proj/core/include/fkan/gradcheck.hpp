#pragma once

#include "fkan/graph.hpp"

#include <functional>
#include <span>
#include <vector>

namespace fkan::ad {

/// Builds a scalar root from leaves that hold the probe point.
using MultiBuilder = std::function<Var(Graph&, std::span<const Var>)>;
using Builder = std::function<Var(Graph&, Var)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0; // flattened over all points
};

/// Compares reverse-mode gradients against central differences. Each
/// coordinate tries steps h, 10h, 100h and h/10 and keeps the smallest
/// relative error |a - fd| / (|a| + |fd| + 1e-12). Throws NonFiniteError
/// with the coordinate index on any NaN or infinity.
GradCheckReport grad_check_report(const MultiBuilder& f, std::span<const Tensor> points, double step = 1e-6);

double grad_check(const MultiBuilder& f, std::span<const Tensor> points, double step = 1e-6);
double grad_check(const Builder& f, const Tensor& point, double step = 1e-6);

} // namespace fkan::ad
