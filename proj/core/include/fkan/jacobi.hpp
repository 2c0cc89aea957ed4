#pragma once

// Jacobi polynomials J_n^{(alpha, beta)} on [-1, 1] and the fractional
// domain map. Plain double-precision routines with no graph involvement.

#include "fkan/tensor.hpp"

#include <span>
#include <vector>

namespace fkan::jacobi {

struct Basis {
    double alpha = 0.0;
    double beta = 0.0;
};

/// Coefficients of J_{n+1} = (a z + b) J_n - c J_{n-1}, valid for n >= 1.
struct Recurrence {
    double a;
    double b;
    double c;
};

/// Rising factorial a (a+1) ... (a+n-1); 1 for n == 0.
double pochhammer(double a, unsigned n) noexcept;

/// Terminating Gauss series sum_k (a1)_k (a2)_k / (b1)_k z^k / k!.
/// a1 must be a non-positive integer.
double hyp2f1_polynomial(double a1, double a2, double b1, double z);

/// Slow closed form through the hypergeometric series; used as an oracle.
double jacobi_via_hyp2f1(Basis basis, unsigned n, double z);

Recurrence recurrence(Basis basis, unsigned n);

/// Row k holds J_k(z_j) for k = 0..max_degree. Points within 1e-12 of
/// the interval are clamped onto it.
ad::Tensor eval_all(Basis basis, unsigned max_degree, std::span<const double> z);

/// m-th derivative of J_n at each point; zeros when m > n.
std::vector<double> derivative(Basis basis, unsigned n, unsigned m, std::span<const double> z);

/// phi(s) = (2 s^gamma - d0 - d1) / (d1 - d0).
struct FractionalMap {
    double d0 = 0.0;
    double d1 = 1.0;
    double gamma = 1.0;

    [[nodiscard]] std::vector<double> apply(std::span<const double> s) const;
};

/// Exact J_n(-1) or J_n(+1); endpoint must be -1 or +1.
double boundary_value(Basis basis, unsigned n, int endpoint);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(unsigned count, std::vector<double>& nodes, std::vector<double>& weights);

/// Weighted inner product <J_m, J_n> with weight (1-z)^alpha (1+z)^beta.
/// The interval is split at 0 and each half is graded towards its
/// endpoint so that singular weights still integrate accurately; points
/// is the Gauss-Legendre count per half.
double inner_product(Basis basis, unsigned m, unsigned n, unsigned points);

} // namespace fkan::jacobi
