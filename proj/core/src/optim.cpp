#include "fkan/optim.hpp"

#include "fkan/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <ostream>

namespace fkan::optim {

Adam::Adam(const nn::ParameterSet& params, AdamOptions options) : options_(options)
{
    for (const auto& it : params.items()) {
        m_.emplace_back(it.value.shape());
        v_.emplace_back(it.value.shape());
    }
}

void Adam::step(nn::ParameterSet& params, std::span<const double> grads)
{
    if (params.size() != m_.size() || grads.size() != params.count()) {
        throw ShapeError("adam: gradient of " + std::to_string(grads.size()) + " values for " +
                         std::to_string(params.count()) + " parameters");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (std::isfinite(grads[i])) continue;
        std::size_t offset = 0;
        for (const auto& it : params.items()) {
            if (i < offset + it.value.size()) {
                throw NonFiniteError("adam: non-finite gradient for parameter '" + it.name + "'", i - offset);
            }
            offset += it.value.size();
        }
    }
    ++steps_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    std::size_t k = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto value = params[p].value.data();
        auto m = m_[p].data();
        auto v = v_[p].data();
        for (std::size_t i = 0; i < value.size(); ++i, ++k) {
            const double g = grads[k];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            value[i] -= options_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.epsilon);
        }
    }
    params.clamp();
}

bool EarlyStopping::update(double loss)
{
    if (loss < best_) {
        best_ = loss;
        since_ = 0;
        return false;
    }
    ++since_;
    return since_ >= patience_;
}

double infinity_norm(std::span<const double> v) noexcept
{
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Probe {
    double step;
    double f;
    double slope;
    std::vector<double> x;
    std::vector<double> g;
};

// Minimiser of the cubic matching f and f' at both ends, or NaN.
double cubic_min(double a, double fa, double da, double b, double fb, double db)
{
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

} // namespace

LineSearchResult line_search(const Objective& objective, std::span<const double> x, double f, std::span<const double> g,
                             std::span<const double> d, double initial_step, const LineSearchOptions& opt)
{
    const std::size_t n = x.size();
    const double slope0 = dot(g, d);
    LineSearchResult res;
    if (!(slope0 < 0.0)) return res;

    auto probe = [&](double a) {
        Probe p{a, 0.0, 0.0, std::vector<double>(n), std::vector<double>(n)};
        for (std::size_t i = 0; i < n; ++i) p.x[i] = x[i] + a * d[i];
        p.f = objective(p.x, p.g);
        ++res.evaluations;
        p.slope = dot(p.g, d);
        if (!std::isfinite(p.slope)) p.f = std::numeric_limits<double>::infinity();
        return p;
    };
    auto armijo = [&](const Probe& p) { return std::isfinite(p.f) && p.f <= f + opt.c1 * p.step * slope0; };
    auto curvature = [&](const Probe& p) { return std::abs(p.slope) <= -opt.c2 * slope0; };
    auto accept = [&](Probe&& p, bool wolfe) {
        res.ok = true;
        res.wolfe = wolfe;
        res.step = p.step;
        res.loss = p.f;
        res.x = std::move(p.x);
        res.grad = std::move(p.g);
        return res;
    };

    auto zoom = [&](Probe lo, Probe hi) {
        while (res.evaluations < opt.max_evaluations) {
            const double left = std::min(lo.step, hi.step);
            const double right = std::max(lo.step, hi.step);
            const double width = right - left;
            if (width <= 1e-16 * std::max(1.0, right)) break;
            double a = std::isfinite(hi.f) ? cubic_min(lo.step, lo.f, lo.slope, hi.step, hi.f, hi.slope) : std::nan("");
            if (!std::isfinite(a) || a < left + 0.1 * width || a > right - 0.1 * width) a = left + 0.5 * width;
            Probe p = probe(a);
            if (!armijo(p) || p.f >= lo.f) {
                hi = std::move(p);
                continue;
            }
            if (curvature(p)) return accept(std::move(p), true);
            if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
            lo = std::move(p);
        }
        // Out of budget: lo still satisfies sufficient decrease if it moved.
        if (lo.step > 0.0) return accept(std::move(lo), false);
        return res;
    };

    Probe prev{0.0, f, slope0, {x.begin(), x.end()}, {g.begin(), g.end()}};
    double a = std::min(initial_step, opt.max_step);
    bool first = true;
    while (res.evaluations < opt.max_evaluations) {
        Probe p = probe(a);
        if (!std::isfinite(p.f)) {
            // Overshot into a region where the loss is undefined.
            a = prev.step + 0.5 * (a - prev.step);
            if (a - prev.step <= 1e-16) break;
            continue;
        }
        if (!armijo(p) || (!first && p.f >= prev.f)) return zoom(std::move(prev), std::move(p));
        if (curvature(p)) return accept(std::move(p), true);
        if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev));
        first = false;
        if (a >= opt.max_step) return accept(std::move(p), false);
        prev = std::move(p);
        a = std::min(2.0 * a, opt.max_step);
    }
    if (prev.step > 0.0) return accept(std::move(prev), false);
    return res;
}

std::string_view status_name(LbfgsStatus status) noexcept
{
    switch (status) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
    case LbfgsStatus::Stopped: return "stopped";
    }
    return "?";
}

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsOptions& opt,
                           const IterationCallback& callback)
{
    const std::size_t n = x0.size();
    LbfgsResult res;
    res.x = std::move(x0);
    std::vector<double> g(n);
    double f = objective(res.x, g);
    res.evaluations = 1;
    if (!std::isfinite(f)) throw NonFiniteError("lbfgs: non-finite loss at the initial point", 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i])) throw NonFiniteError("lbfgs: non-finite gradient at the initial point", i);
    }
    res.loss = f;
    res.trace.push_back({0, f, infinity_norm(g), 0.0, 1, true});
    if (infinity_norm(g) < opt.gradient_tolerance) {
        res.status = LbfgsStatus::Converged;
        return res;
    }

    struct Pair {
        std::vector<double> s;
        std::vector<double> y;
        double rho;
    };
    std::deque<Pair> hist;
    std::vector<double> d(n);
    std::vector<double> alpha;
    res.status = LbfgsStatus::MaxIterations;

    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        // Two-loop recursion: d = -H g.
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        alpha.assign(hist.size(), 0.0);
        for (std::size_t k = hist.size(); k-- > 0;) {
            alpha[k] = hist[k].rho * dot(hist[k].s, d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * hist[k].y[i];
        }
        if (opt.scale_initial_hessian && !hist.empty()) {
            const Pair& last = hist.back();
            const double scale = 1.0 / (last.rho * dot(last.y, last.y));
            for (double& v : d) v *= scale;
        }
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double beta = hist[k].rho * dot(hist[k].y, d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * hist[k].s[i];
        }
        if (!(dot(d, g) < 0.0)) {
            hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        }
        // Without curvature information the first step length is a guess;
        // keep it from jumping far on steep losses.
        const double a0 = hist.empty() ? std::min(opt.initial_step, 1.0 / std::max(1.0, infinity_norm(g)))
                                       : opt.initial_step;
        LineSearchResult ls = line_search(objective, res.x, f, g, d, a0, opt.line_search);
        res.evaluations += ls.evaluations;
        if (!ls.ok) {
            res.status = LbfgsStatus::LineSearchFailed;
            break;
        }
        Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = ls.x[i] - res.x[i];
            p.y[i] = ls.grad[i] - g[i];
        }
        const double sy = dot(p.s, p.y);
        const TraceRow row{it, ls.loss, infinity_norm(ls.grad), ls.step, ls.evaluations,
                           ls.loss <= f + opt.line_search.c1 * ls.step * dot(g, d)};
        res.x = std::move(ls.x);
        g = std::move(ls.grad);
        f = ls.loss;
        res.loss = f;
        res.trace.push_back(row);
        if (sy > opt.curvature_floor * dot(p.y, p.y)) {
            p.rho = 1.0 / sy;
            hist.push_back(std::move(p));
            if (hist.size() > opt.history) hist.pop_front();
        } else {
            ++res.skipped_pairs;
        }
        if (row.gradient_norm < opt.gradient_tolerance) {
            res.status = LbfgsStatus::Converged;
            break;
        }
        if (callback && !callback(row, res.x)) {
            res.status = LbfgsStatus::Stopped;
            break;
        }
    }
    return res;
}

void write_loss_trace(std::ostream& out, std::span<const TraceRow> trace)
{
    out << "iteration,loss,gradient_norm\n";
    char buf[96];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.iteration, r.loss, r.gradient_norm);
        out << buf;
    }
}

} // namespace fkan::optim
