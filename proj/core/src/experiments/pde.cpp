#include "fkan/experiments.hpp"

#include "fkan/error.hpp"

#include "seeds.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fkan::experiments {

using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

std::vector<unsigned> default_degrees(const PinnOptions& o)
{
    return o.degrees.empty() ? std::vector<unsigned>{1, 2, 3, 4, 5, 6} : o.degrees;
}

Tensor column_of(const std::vector<double>& v) { return Tensor::column(v); }

struct Trained {
    pinn::TrainResult train;
    double wall_ms;
};

Trained fit(nn::Network& net, const pinn::Problem& problem, const PinnOptions& o, std::size_t iterations,
            const std::string& label)
{
    const auto t0 = std::chrono::steady_clock::now();
    optim::LbfgsOptions lo;
    lo.history = o.history;
    lo.max_iterations = iterations;
    lo.gradient_tolerance = 1e-12;
    optim::IterationCallback cb;
    if (o.verbose) {
        cb = [label](const optim::TraceRow& row, std::span<const double>) {
            if (row.iteration % 100 == 0) {
                std::fprintf(stderr, "[%s] iter %zu loss %.6e |g| %.3e\n", label.c_str(), row.iteration, row.loss,
                             row.gradient_norm);
            }
            return true;
        };
    }
    Trained t{pinn::train(net, problem, lo, cb), 0.0};
    t.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return t;
}

PinnResult finish(Trained&& t, Metrics metrics)
{
    PinnResult r;
    metrics.wall_ms = t.wall_ms;
    r.metrics = std::move(metrics);
    r.status = std::string(optim::status_name(t.train.lbfgs.status));
    r.final_loss = t.train.loss;
    r.iterations = t.train.lbfgs.trace.size() - 1;
    r.loss_trace = std::move(t.train.lbfgs.trace);
    return r;
}

/// Residual column of the problem at the network's parameters.
std::vector<double> residual_values(const nn::Network& net, const pinn::Problem& problem)
{
    Graph g;
    const auto bound = net.parameters().bind(g);
    const pinn::Model model = pinn::network_model(net, bound);
    const Var input = g.input(problem.grid);
    return problem.build(g, model, input).residual.value().vector();
}

// Lane-Emden as a first-order system, started from the series
// 1 - z^2/6 + m z^4/120 - m(8m-5) z^6/15120 near the singular point.
struct LaneEmdenState {
    double z;
    double y;
    double dy;
};

LaneEmdenState lane_emden_series(unsigned m, double z)
{
    const double md = m;
    const double z2 = z * z;
    const double y = 1.0 - z2 / 6.0 + md * z2 * z2 / 120.0 - md * (8.0 * md - 5.0) * z2 * z2 * z2 / 15120.0;
    const double dy = -z / 3.0 + md * z2 * z / 30.0 - 6.0 * md * (8.0 * md - 5.0) * z2 * z2 * z / 15120.0;
    return {z, y, dy};
}

LaneEmdenState rk4(unsigned m, LaneEmdenState s, double h)
{
    auto f = [m](double z, double y, double dy, double& ky, double& kdy) {
        ky = dy;
        kdy = -std::pow(y, static_cast<int>(m)) - 2.0 * dy / z;
    };
    double k1y, k1d, k2y, k2d, k3y, k3d, k4y, k4d;
    f(s.z, s.y, s.dy, k1y, k1d);
    f(s.z + h / 2, s.y + h / 2 * k1y, s.dy + h / 2 * k1d, k2y, k2d);
    f(s.z + h / 2, s.y + h / 2 * k2y, s.dy + h / 2 * k2d, k3y, k3d);
    f(s.z + h, s.y + h * k3y, s.dy + h * k3d, k4y, k4d);
    return {s.z + h, s.y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y), s.dy + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)};
}

constexpr double kSeriesStart = 1e-3;
constexpr double kRk4Step = 2e-4;

} // namespace

// --- Lane-Emden ------------------------------------------------------------------

double lane_emden_domain(unsigned m)
{
    static constexpr double domains[] = {3.0, 4.0, 5.0, 8.0, 16.0, 10.0};
    if (m > 5) throw DomainError("lane-emden: m must be in 0..5, got " + std::to_string(m));
    return domains[m];
}

std::optional<double> lane_emden_table_root(unsigned m)
{
    static constexpr double roots[] = {2.44948974, 3.14159265, 4.35287460, 6.89684860, 14.9715463};
    if (m <= 4) return roots[m];
    return std::nullopt;
}

std::optional<double> lane_emden_exact(unsigned m, double z)
{
    switch (m) {
    case 0: return 1.0 - z * z / 6.0;
    case 1: return z == 0.0 ? 1.0 : std::sin(z) / z;
    case 5: return 1.0 / std::sqrt(1.0 + z * z / 3.0);
    default: return std::nullopt;
    }
}

std::vector<double> lane_emden_reference(unsigned m, std::span<const double> z)
{
    std::vector<double> out;
    out.reserve(z.size());
    LaneEmdenState s = lane_emden_series(m, kSeriesStart);
    for (double target : z) {
        if (target < 0.0) throw DomainError("lane-emden reference: negative point");
        if (target <= kSeriesStart) {
            out.push_back(lane_emden_series(m, target).y);
            continue;
        }
        if (target < s.z) throw std::invalid_argument("lane-emden reference: points must be sorted");
        while (s.z < target) s = rk4(m, s, std::min(kRk4Step, target - s.z));
        out.push_back(s.y);
    }
    return out;
}

std::optional<double> lane_emden_reference_root(unsigned m, double domain)
{
    LaneEmdenState s = lane_emden_series(m, kSeriesStart);
    while (s.z < domain) {
        const LaneEmdenState next = rk4(m, s, kRk4Step);
        if (next.y <= 0.0) {
            double lo = 0.0, hi = kRk4Step;
            for (int i = 0; i < 100 && hi - lo > 1e-16; ++i) {
                const double mid = 0.5 * (lo + hi);
                (rk4(m, s, mid).y > 0.0 ? lo : hi) = mid;
            }
            return s.z + 0.5 * (lo + hi);
        }
        s = next;
    }
    return std::nullopt;
}

pinn::Problem lane_emden_problem(unsigned m, double domain, std::size_t points)
{
    if (m > 5) throw DomainError("lane-emden: m must be in 0..5, got " + std::to_string(m));
    if (points == 0) throw std::invalid_argument("lane-emden: need collocation points");
    std::vector<double> z(points), inv(points);
    for (std::size_t i = 0; i < points; ++i) {
        z[i] = domain * static_cast<double>(i + 1) / static_cast<double>(points);
        inv[i] = 2.0 / z[i];
    }
    pinn::Problem p;
    p.grid = column_of(z);
    p.build = [m, inv = column_of(inv)](Graph& g, const pinn::Model& model, Var x) {
        const Var y = model(g, x);
        pinn::InputDerivative d(g, x, 0);
        const Var y1 = d(y, 1);
        const Var y2 = d(y, 2);
        const Var source = m == 0 ? g.constant(Tensor(y.shape(), 1.0)) : ad::powi(y, static_cast<int>(m));
        pinn::Residuals r;
        r.residual = y2 + g.constant(inv) * y1 + source;
        const Var x0 = g.input(Tensor::scalar(0.0));
        const Var y0 = model(g, x0);
        pinn::InputDerivative d0(g, x0, 0);
        r.initial = {y0 - 1.0, d0(y0, 1)};
        return r;
    };
    return p;
}

nn::NetworkSpec lane_emden_network(unsigned m, const PinnOptions& o)
{
    nn::NetworkSpec s;
    s.architecture = nn::Architecture::ParallelFusion;
    s.widths = o.widths.empty() ? std::vector<std::size_t>{1, 10, 1} : o.widths;
    s.degrees = default_degrees(o);
    s.input_lo = {0.0};
    s.input_hi = {lane_emden_domain(m)};
    return s;
}

PinnResult run_lane_emden(unsigned m, std::uint64_t seed, const PinnOptions& o)
{
    const double domain = lane_emden_domain(m);
    const std::size_t points = o.points ? o.points : 1500;
    const pinn::Problem problem = lane_emden_problem(m, domain, points);
    nn::Network net(lane_emden_network(m, o), derive_seed(seed, 10));
    Trained t = fit(net, problem, o, o.max_iterations ? o.max_iterations : 5000, "lane-emden");

    std::vector<double> z(points + 1);
    for (std::size_t i = 0; i <= points; ++i) z[i] = domain * static_cast<double>(i) / static_cast<double>(points);
    const Tensor pred = net.predict(Tensor::column(z));
    std::vector<double> exact(z.size());
    if (lane_emden_exact(m, 0.0)) {
        for (std::size_t i = 0; i < z.size(); ++i) exact[i] = *lane_emden_exact(m, z[i]);
    } else {
        exact = lane_emden_reference(m, z);
    }
    const ErrorStats e = compare(pred.data(), exact);
    Metrics metrics{"lane-emden-m" + std::to_string(m), seed, e.mae, e.mse, e.max_abs, std::nullopt, 0.0};
    metrics.first_root = first_root([&net](double v) { return net.predict(Tensor::scalar(v)).item(); }, z);

    const std::vector<double> res = residual_values(net, problem);
    PinnResult r = finish(std::move(t), std::move(metrics));
    r.solution.columns = {"zeta", "prediction", "exact", "abs_err"};
    for (std::size_t i = 0; i < z.size(); ++i) r.solution.rows.push_back({z[i], pred[i], exact[i], std::abs(pred[i] - exact[i])});
    r.residual.columns = {"zeta", "residual"};
    for (std::size_t i = 0; i < points; ++i) r.residual.rows.push_back({problem.grid[i], res[i]});
    return r;
}

// --- Burgers -----------------------------------------------------------------------

double burgers_exact(const BurgersParams& p, double zeta, double tau)
{
    return p.m2 / p.m0 + 2.0 * (p.m1 / p.m0) * std::tanh(zeta - p.m2 * tau);
}

pinn::Problem burgers_problem(const BurgersParams& p, std::size_t n)
{
    if (p.m0 == 0.0) throw DomainError("burgers: m0 must be nonzero");
    if (n < 2) throw std::invalid_argument("burgers: grid needs at least 2 points per axis");
    const double step = 1.0 / static_cast<double>(n - 1);
    pinn::Problem prob;
    prob.grid = Tensor(n * n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            prob.grid(i * n + j, 0) = static_cast<double>(i) * step;
            prob.grid(i * n + j, 1) = static_cast<double>(j) * step;
        }
    }
    Tensor initial_pts(n, 2), initial_val(n, 1), left_pts(n, 2), right_pts(n, 2), left_val(n, 1), right_val(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) * step;
        initial_pts(k, 0) = s;
        initial_val[k] = burgers_exact(p, s, 0.0);
        left_pts(k, 1) = s;
        right_pts(k, 0) = 1.0;
        right_pts(k, 1) = s;
        left_val[k] = burgers_exact(p, 0.0, s);
        right_val[k] = burgers_exact(p, 1.0, s);
    }
    prob.build = [p, initial_pts, initial_val, left_pts, right_pts, left_val, right_val](Graph& g, const pinn::Model& model,
                                                                                       Var x) {
        const Var y = model(g, x);
        pinn::InputDerivative dz(g, x, 0);
        pinn::InputDerivative dt(g, x, 1);
        pinn::Residuals r;
        r.residual = dt(y, 1) + p.m0 * (y * dz(y, 1)) + p.m1 * dz(y, 2);
        r.initial = {model(g, g.constant(initial_pts)) - g.constant(initial_val)};
        r.boundary = {model(g, g.constant(left_pts)) - g.constant(left_val),
                      model(g, g.constant(right_pts)) - g.constant(right_val)};
        return r;
    };
    return prob;
}

nn::NetworkSpec burgers_network(const PinnOptions& o)
{
    nn::NetworkSpec s;
    s.architecture = nn::Architecture::ParallelFusion;
    s.widths = o.widths.empty() ? std::vector<std::size_t>{2, 2, 1} : o.widths;
    s.degrees = default_degrees(o);
    s.input_lo = {0.0, 0.0};
    s.input_hi = {1.0, 1.0};
    return s;
}

PinnResult run_burgers(const BurgersParams& p, std::uint64_t seed, const PinnOptions& o)
{
    const std::size_t n = o.points ? o.points : 100;
    const pinn::Problem problem = burgers_problem(p, n);
    nn::Network net(burgers_network(o), derive_seed(seed, 20));
    Trained t = fit(net, problem, o, o.max_iterations ? o.max_iterations : 500, "burgers");

    // Always scored on the full 100 x 100 grid.
    const pinn::Problem eval = n == 100 ? problem : burgers_problem(p, 100);
    const Tensor pred = net.predict(eval.grid);
    std::vector<double> exact(eval.grid.rows());
    for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = burgers_exact(p, eval.grid(i, 0), eval.grid(i, 1));
    const ErrorStats e = compare(pred.data(), exact);
    const std::vector<double> res = residual_values(net, eval);

    char name[96];
    std::snprintf(name, sizeof name, "burgers-%g-%g-%g", p.m0, p.m1, p.m2);
    PinnResult r = finish(std::move(t), {name, seed, e.mae, e.mse, e.max_abs, std::nullopt, 0.0});
    r.solution.columns = {"zeta", "tau", "prediction", "exact", "abs_err"};
    r.residual.columns = {"zeta", "tau", "residual"};
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double z = eval.grid(i, 0), tau = eval.grid(i, 1);
        r.solution.rows.push_back({z, tau, pred[i], exact[i], std::abs(pred[i] - exact[i])});
        r.residual.rows.push_back({z, tau, res[i]});
    }
    return r;
}

// --- delay FDE -----------------------------------------------------------------------

double delay_forcing(double z)
{
    return 1.0 - 3.0 * z + 3.0 * z * z + 2000.0 * std::pow(z, 2.7) / (1071.0 * std::tgamma(0.7));
}

pinn::Problem delay_problem(std::size_t n)
{
    if (n < 1) throw std::invalid_argument("delay fde: need at least one step");
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> z(n + 1), f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        z[i] = static_cast<double>(i) * h;
        f[i] = delay_forcing(z[i]);
    }
    pinn::Problem p;
    p.grid = column_of(z);
    p.build = [grid = p.grid, caputo = pinn::caputo_l1_matrix(kDelayOrder, n, h).matrix,
               forcing = column_of(f)](Graph& g, const pinn::Model& model, Var x) {
        const Var y = model(g, x);
        const Var frac = ad::matmul(g.constant(caputo), y);
        const Var lagged = pinn::delayed(g, model, grid, 1.0);
        pinn::Residuals r;
        r.residual = frac - (lagged - y + g.constant(forcing));
        r.initial = {ad::slice(y, 0, 1, 0, 1)};
        return r;
    };
    return p;
}

nn::NetworkSpec delay_network(const PinnOptions& o)
{
    nn::NetworkSpec s;
    s.architecture = nn::Architecture::ParallelFusion;
    s.widths = o.widths.empty() ? std::vector<std::size_t>{1, 10, 10, 10, 10, 10, 1} : o.widths;
    s.degrees = default_degrees(o);
    // The residual also evaluates the network on [-1, 0).
    s.input_lo = {-1.0};
    s.input_hi = {1.0};
    return s;
}

PinnResult run_delay_fde(std::uint64_t seed, const PinnOptions& o)
{
    const std::size_t n = o.points ? o.points : 2000;
    const pinn::Problem problem = delay_problem(n);
    nn::Network net(delay_network(o), derive_seed(seed, 30));
    Trained t = fit(net, problem, o, o.max_iterations ? o.max_iterations : 3000, "delay-fde");

    std::vector<double> z(1001), exact(1001);
    for (std::size_t i = 0; i <= 1000; ++i) {
        z[i] = static_cast<double>(i) / 1000.0;
        exact[i] = z[i] * z[i] * z[i];
    }
    const Tensor pred = net.predict(Tensor::column(z));
    const ErrorStats e = compare(pred.data(), exact);
    const std::vector<double> res = residual_values(net, problem);
    PinnResult r = finish(std::move(t), {"delay-fde", seed, e.mae, e.mse, e.max_abs, std::nullopt, 0.0});
    r.solution.columns = {"zeta", "prediction", "exact", "abs_err"};
    for (std::size_t i = 0; i < z.size(); ++i) r.solution.rows.push_back({z[i], pred[i], exact[i], std::abs(pred[i] - exact[i])});
    r.residual.columns = {"zeta", "residual"};
    for (std::size_t i = 0; i <= n; ++i) r.residual.rows.push_back({problem.grid[i], res[i]});
    return r;
}

} // namespace fkan::experiments
