#include "fkan/experiments.hpp"

#include "fkan/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace fkan::experiments {

namespace {

std::string number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_metrics_header(std::ostream& out) { out << "experiment,seed,mae,mse,max_abs,first_root,wall_ms\n"; }

void write_metrics_row(std::ostream& out, const Metrics& m, bool with_wall_time)
{
    out << m.experiment << ',' << m.seed << ',' << number(m.mae) << ',' << number(m.mse) << ',' << number(m.max_abs)
        << ',' << (m.first_root ? number(*m.first_root) : "") << ',';
    if (with_wall_time) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", m.wall_ms);
        out << buf;
    }
    out << '\n';
}

void write_table(std::ostream& out, const Table& table)
{
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << number(row[c]);
        out << '\n';
    }
}

ErrorStats compare(std::span<const double> prediction, std::span<const double> exact)
{
    if (prediction.size() != exact.size() || prediction.empty()) {
        throw ShapeError("compare: " + std::to_string(prediction.size()) + " predictions for " +
                         std::to_string(exact.size()) + " reference values");
    }
    ErrorStats s;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double e = std::abs(prediction[i] - exact[i]);
        s.mae += e;
        s.mse += e * e;
        s.max_abs = std::max(s.max_abs, e);
    }
    s.mae /= static_cast<double>(prediction.size());
    s.mse /= static_cast<double>(prediction.size());
    return s;
}

std::optional<double> first_root(const std::function<double(double)>& f, std::span<const double> grid,
                                 double tolerance)
{
    if (grid.empty()) return std::nullopt;
    double a = grid[0];
    double fa = f(a);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double b = grid[i];
        const double fb = f(b);
        if (fa == 0.0 && a > 0.0) return a;
        if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
            double lo = a, hi = b, flo = fa;
            while (hi - lo > tolerance * std::max(1.0, std::abs(hi))) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                const double fm = f(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        if (fb == 0.0 && b > 0.0) return b;
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

} // namespace fkan::experiments
