#include "fkan/jacobi_check.hpp"

#include "fkan/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <vector>

namespace fkan::jacobi {

namespace {

constexpr unsigned kMaxDegree = 8;

std::vector<double> uniform_points(std::mt19937_64& rng, std::size_t count, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> z(count);
    for (auto& v : z) v = u(rng);
    return z;
}

Basis random_basis(std::mt19937_64& rng)
{
    // (-0.9, 3]
    std::uniform_real_distribution<double> u(-0.9, 3.0);
    double a = u(rng);
    double b = u(rng);
    if (a == -0.9) a = 3.0;
    if (b == -0.9) b = 3.0;
    return {a, b};
}

void sweep_values(std::mt19937_64& rng, CheckReport& r)
{
    for (int t = 0; t < 50; ++t) {
        const Basis b = random_basis(rng);
        const Basis swapped{b.beta, b.alpha};
        auto z = uniform_points(rng, 98, -1.0, 1.0);
        z.push_back(-1.0);
        z.push_back(1.0);
        std::vector<double> neg(z.size());
        std::transform(z.begin(), z.end(), neg.begin(), [](double v) { return -v; });

        const auto values = eval_all(b, kMaxDegree, z);
        const auto at_neg = eval_all(b, kMaxDegree, neg);
        const auto swapped_values = eval_all(swapped, kMaxDegree, z);
        for (unsigned n = 0; n <= kMaxDegree; ++n) {
            const double sign = n % 2 ? -1.0 : 1.0;
            const auto d1 = derivative(b, n, 1, z);
            const auto d2 = derivative(b, n, 2, z);
            const double eig = n * (n + 1 + b.alpha + b.beta);
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double v = values(n, i);
                r.hyp2f1 = std::max(r.hyp2f1, std::abs(v - jacobi_via_hyp2f1(b, n, z[i])));
                r.symmetry = std::max(r.symmetry, std::abs(at_neg(n, i) - sign * swapped_values(n, i)));
                const double lhs = (z[i] * z[i] - 1) * d2[i] + (b.alpha - b.beta + (b.alpha + b.beta + 2) * z[i]) * d1[i];
                r.sturm_liouville = std::max(r.sturm_liouville, std::abs(lhs - eig * v));
            }
            for (int e : {-1, 1}) {
                const double exact = boundary_value(b, n, e);
                const double got = values(n, e < 0 ? z.size() - 2 : z.size() - 1);
                r.boundary = std::max(r.boundary, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
            }
        }
    }
}

void sweep_derivative(std::mt19937_64& rng, CheckReport& r)
{
    constexpr double h = 1e-5;
    for (int t = 0; t < 20; ++t) {
        const Basis b = random_basis(rng);
        const auto z = uniform_points(rng, 50, -0.99, 0.99);
        std::vector<double> up(z), down(z);
        for (std::size_t i = 0; i < z.size(); ++i) {
            up[i] += h;
            down[i] -= h;
        }
        const auto hi = eval_all(b, kMaxDegree, up);
        const auto lo = eval_all(b, kMaxDegree, down);
        for (unsigned n = 1; n <= kMaxDegree; ++n) {
            const auto d = derivative(b, n, 1, z);
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double fd = (hi(n, i) - lo(n, i)) / (2 * h);
                r.derivative = std::max(r.derivative, std::abs(fd - d[i]) / std::max(1.0, std::abs(d[i])));
            }
        }
    }
}

void sweep_roots(std::mt19937_64& rng, CheckReport& r)
{
    constexpr std::size_t grid = 10001;
    std::vector<double> z(grid);
    for (std::size_t i = 0; i < grid; ++i) z[i] = -1.0 + 2.0 * static_cast<double>(i + 1) / (grid + 1);
    for (int t = 0; t < 20; ++t) {
        const auto values = eval_all(random_basis(rng), kMaxDegree, z);
        for (unsigned n = 0; n <= kMaxDegree; ++n) {
            unsigned changes = 0;
            for (std::size_t i = 1; i < grid; ++i) changes += values(n, i - 1) * values(n, i) < 0.0;
            ++r.root_count_cases;
            r.root_count_failures += changes != n;
        }
    }
}

void sweep_orthogonality(std::mt19937_64& rng, CheckReport& r)
{
    for (int t = 0; t < 10; ++t) {
        const Basis b = random_basis(rng);
        for (unsigned n = 1; n <= 6; ++n)
            for (unsigned m = 0; m < n; ++m) r.orthogonality = std::max(r.orthogonality, std::abs(inner_product(b, m, n, 200)));
    }
}

} // namespace

bool CheckReport::passed() const noexcept
{
    return hyp2f1 < 1e-9 && symmetry < 1e-10 && derivative < 1e-6 && sturm_liouville < 1e-8 && boundary < 1e-9 &&
           orthogonality < 1e-7 && root_count_failures == 0;
}

CheckReport check_properties(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    CheckReport r;
    sweep_values(rng, r);
    sweep_derivative(rng, r);
    sweep_roots(rng, r);
    sweep_orthogonality(rng, r);
    return r;
}

void print_report(std::ostream& out, const CheckReport& r)
{
    out << "hyp2f1_max_abs " << r.hyp2f1 << " (< 1e-9)\n"
        << "symmetry_max_abs " << r.symmetry << " (< 1e-10)\n"
        << "derivative_max_rel " << r.derivative << " (< 1e-6)\n"
        << "sturm_liouville_max_abs " << r.sturm_liouville << " (< 1e-8)\n"
        << "boundary_max_rel " << r.boundary << " (< 1e-9)\n"
        << "orthogonality_max_abs " << r.orthogonality << " (< 1e-7)\n"
        << "root_count_failures " << r.root_count_failures << " of " << r.root_count_cases << '\n'
        << (r.passed() ? "all properties hold" : "property violated") << '\n';
}

} // namespace fkan::jacobi
