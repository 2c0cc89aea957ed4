#include "fkan/jacobi.hpp"

#include "fkan/error.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

namespace fkan::jacobi {

namespace {

void check_basis(Basis b)
{
    if (!(b.alpha > -1.0) || !(b.beta > -1.0)) {
        throw DomainError("jacobi: alpha and beta must exceed -1, got alpha=" + std::to_string(b.alpha) +
                          " beta=" + std::to_string(b.beta));
    }
}

double clamp_point(double z, std::size_t index)
{
    if (std::abs(z) > 1.0 + 1e-12 || std::isnan(z)) {
        throw DomainError("jacobi: point " + std::to_string(z) + " at index " + std::to_string(index) +
                          " outside [-1, 1]");
    }
    return std::clamp(z, -1.0, 1.0);
}

} // namespace

double pochhammer(double a, unsigned n) noexcept
{
    double p = 1.0;
    for (unsigned k = 0; k < n; ++k) p *= a + k;
    return p;
}

double hyp2f1_polynomial(double a1, double a2, double b1, double z)
{
    if (a1 > 0.0 || a1 != std::floor(a1)) {
        throw DomainError("hyp2f1: a1 must be a non-positive integer, got " + std::to_string(a1));
    }
    const auto terms = static_cast<unsigned>(-a1);
    double sum = 1.0;
    double term = 1.0;
    for (unsigned k = 0; k < terms; ++k) {
        const double denom = (b1 + k) * (k + 1.0);
        if (denom == 0.0) throw DomainError("hyp2f1: b1 hits a non-positive integer");
        term *= (a1 + k) * (a2 + k) / denom * z;
        sum += term;
    }
    return sum;
}

double jacobi_via_hyp2f1(Basis b, unsigned n, double z)
{
    check_basis(b);
    double lead = 1.0;
    for (unsigned k = 1; k <= n; ++k) lead *= (b.alpha + k) / k;
    return lead * hyp2f1_polynomial(-static_cast<double>(n), n + b.alpha + b.beta + 1.0, b.alpha + 1.0,
                                    (1.0 - z) / 2.0);
}

Recurrence recurrence(Basis b, unsigned n)
{
    assert(n >= 1);
    const double ab = b.alpha + b.beta;
    const double s = 2.0 * n + ab;
    assert(s > 0.0);
    const double den = 2.0 * (n + 1.0) * (n + ab + 1.0);
    return {
        (s + 1.0) * (s + 2.0) / den,
        (b.alpha * b.alpha - b.beta * b.beta) * (s + 1.0) / (den * s),
        2.0 * (n + b.alpha) * (n + b.beta) * (s + 2.0) / (den * s),
    };
}

ad::Tensor eval_all(Basis b, unsigned max_degree, std::span<const double> z)
{
    check_basis(b);
    const std::size_t np = z.size();
    ad::Tensor out(max_degree + 1, np);
    for (std::size_t j = 0; j < np; ++j) out(0, j) = 1.0;
    if (max_degree == 0) return out;
    for (std::size_t j = 0; j < np; ++j) {
        const double x = clamp_point(z[j], j);
        out(1, j) = ((b.alpha + b.beta + 2.0) * x + (b.alpha - b.beta)) / 2.0;
    }
    for (unsigned n = 1; n < max_degree; ++n) {
        const Recurrence r = recurrence(b, n);
        for (std::size_t j = 0; j < np; ++j) {
            const double x = std::clamp(z[j], -1.0, 1.0);
            out(n + 1, j) = (r.a * x + r.b) * out(n, j) - r.c * out(n - 1, j);
        }
    }
    return out;
}

std::vector<double> derivative(Basis b, unsigned n, unsigned m, std::span<const double> z)
{
    check_basis(b);
    std::vector<double> out(z.size(), 0.0);
    if (m > n) {
        for (std::size_t j = 0; j < z.size(); ++j) clamp_point(z[j], j);
        return out;
    }
    const double scale = pochhammer(n + b.alpha + b.beta + 1.0, m) / std::ldexp(1.0, static_cast<int>(m));
    const ad::Tensor rows = eval_all({b.alpha + m, b.beta + m}, n - m, z);
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = scale * rows(n - m, j);
    return out;
}

std::vector<double> FractionalMap::apply(std::span<const double> s) const
{
    if (!(d1 > d0)) throw DomainError("fractional map: d1 must exceed d0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("fractional map: gamma must lie in (0, 1]");
    std::vector<double> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (!(s[j] > 0.0)) {
            throw DomainError("fractional map: point " + std::to_string(s[j]) + " at index " + std::to_string(j) +
                              " is not positive");
        }
        out[j] = (2.0 * std::pow(s[j], gamma) - d0 - d1) / (d1 - d0);
    }
    return out;
}

double boundary_value(Basis b, unsigned n, int endpoint)
{
    check_basis(b);
    if (endpoint != 1 && endpoint != -1) throw DomainError("boundary value: endpoint must be -1 or +1");
    const double shift = endpoint == 1 ? b.alpha : b.beta;
    double v = 1.0;
    for (unsigned k = 1; k <= n; ++k) v *= (shift + k) / k;
    return (endpoint == -1 && n % 2 == 1) ? -v : v;
}

void gauss_legendre(unsigned count, std::vector<double>& nodes, std::vector<double>& weights)
{
    nodes.assign(count, 0.0);
    weights.assign(count, 0.0);
    const unsigned half = (count + 1) / 2;
    for (unsigned i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (unsigned k = 2; k <= count; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (count == 1) p0 = 1.0;
            dp = count * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (unsigned k = 2; k <= count; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (count == 1) p0 = 1.0;
        dp = count * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = weights[count - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

double inner_product(Basis b, unsigned m, unsigned n, unsigned points)
{
    check_basis(b);
    std::vector<double> t;
    std::vector<double> w;
    gauss_legendre(points, t, w);

    // On each half substitute (1 - z) = v^r (or (1 + z) = v^r), v in [0, 1],
    // with r large enough that the transformed weight vanishes at v = 0.
    double total = 0.0;
    for (int side : {1, -1}) {
        const double expo = side == 1 ? b.alpha : b.beta;
        const double other = side == 1 ? b.beta : b.alpha;
        const double r = std::max(1.0, std::ceil(2.0 / (1.0 + expo)));
        std::vector<double> z(points);
        std::vector<double> jac(points);
        for (unsigned i = 0; i < points; ++i) {
            const double v = 0.5 * (t[i] + 1.0);
            const double vr = std::pow(v, r);
            z[i] = side * (1.0 - vr);
            // (1 -+ z)^expo dz = r v^{r(expo+1)-1} dv, times the far weight.
            jac[i] = 0.5 * w[i] * r * std::pow(v, r * (expo + 1.0) - 1.0) * std::pow(2.0 - vr, other);
        }
        const unsigned top = std::max(m, n);
        const ad::Tensor rows = eval_all(b, top, z);
        for (unsigned i = 0; i < points; ++i) total += jac[i] * rows(m, i) * rows(n, i);
    }
    return total;
}

} // namespace fkan::jacobi
