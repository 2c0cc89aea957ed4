#include "fkan/gradcheck.hpp"

#include "fkan/error.hpp"

#include <algorithm>
#include <cmath>

namespace fkan::ad {

namespace {

double evaluate(const MultiBuilder& f, std::span<const Tensor> points, std::size_t coord)
{
    Graph g;
    std::vector<Var> leaves;
    leaves.reserve(points.size());
    for (const Tensor& p : points) leaves.push_back(g.parameter(p));
    const double v = f(g, leaves).item();
    if (!std::isfinite(v)) throw NonFiniteError("grad-check: non-finite loss while probing", coord);
    return v;
}

} // namespace

GradCheckReport grad_check_report(const MultiBuilder& f, std::span<const Tensor> points, double step)
{
    std::vector<Tensor> analytic;
    {
        Graph g;
        std::vector<Var> leaves;
        for (const Tensor& p : points) leaves.push_back(g.parameter(p));
        Var root = f(g, leaves);
        if (!std::isfinite(root.item())) throw NonFiniteError("grad-check: non-finite loss at the point", 0);
        g.backward(root, false);
        for (Var v : leaves) analytic.push_back(g.adjoint(v));
    }

    std::vector<Tensor> probe(points.begin(), points.end());
    const double steps[] = {step, 10.0 * step, 100.0 * step, 0.1 * step};
    GradCheckReport report;
    std::size_t flat = 0;
    for (std::size_t t = 0; t < probe.size(); ++t) {
        for (std::size_t i = 0; i < probe[t].size(); ++i, ++flat) {
            const double a = analytic[t][i];
            if (!std::isfinite(a)) throw NonFiniteError("grad-check: non-finite analytic gradient", flat);
            const double x0 = probe[t][i];
            double best = INFINITY;
            for (double h : steps) {
                probe[t][i] = x0 + h;
                const double fp = evaluate(f, probe, flat);
                probe[t][i] = x0 - h;
                const double fm = evaluate(f, probe, flat);
                probe[t][i] = x0;
                const double fd = (fp - fm) / (2.0 * h);
                best = std::min(best, std::abs(a - fd) / (std::abs(a) + std::abs(fd) + 1e-12));
                if (best < 1e-9) break;
            }
            if (best > report.max_rel_error) {
                report.max_rel_error = best;
                report.worst_index = flat;
            }
        }
    }
    return report;
}

double grad_check(const MultiBuilder& f, std::span<const Tensor> points, double step)
{
    return grad_check_report(f, points, step).max_rel_error;
}

double grad_check(const Builder& f, const Tensor& point, double step)
{
    const MultiBuilder wrap = [&f](Graph& g, std::span<const Var> v) { return f(g, v[0]); };
    return grad_check_report(wrap, std::span<const Tensor>(&point, 1), step).max_rel_error;
}

} // namespace fkan::ad
