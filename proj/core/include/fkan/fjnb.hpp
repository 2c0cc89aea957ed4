#pragma once

// Fractional Jacobi neural block:
//   y = sum_k theta_k * J_k^{(elu(a), elu(b))}(2 sigmoid(x)^{sigmoid(g)} - 1)
// with one (a, b, g) triple per block and one theta row per degree.

#include "fkan/graph.hpp"

namespace fkan::nn {

// In exact arithmetic elu(a) > -1 and 0 < sigmoid(g) < 1 for every real
// raw value, but in double precision elu(a) rounds to -1 below a ~ -37 and
// sigmoid(g) to 1 above g ~ 37. Networks keep raw values inside these
// limits so the strict inequalities survive rounding.
inline constexpr double kRawFloor = -30.0;
inline constexpr double kGammaRawLimit = 30.0;

struct EffectiveParams {
    double alpha;
    double beta;
    double gamma;
};

EffectiveParams effective_params(double alpha_raw, double beta_raw, double gamma_raw);

/// Graph handles of one block's trainable state. theta is (q+1) x width.
struct FjnbVars {
    ad::Var alpha_raw;
    ad::Var beta_raw;
    ad::Var gamma_raw;
    ad::Var theta;
    unsigned degree = 0;
};

/// Applies the block elementwise to x (rows x width).
ad::Var fjnb_forward(const FjnbVars& block, ad::Var x);

/// Same function spelled out step by step with elementary primitives
/// (one graph node per recurrence operation). Slower; kept as a
/// cross-check for the fused path.
ad::Var fjnb_forward_composed(const FjnbVars& block, ad::Var x);
/// Via the full basis stack; another cross-check.
ad::Var fjnb_forward_stacked(const FjnbVars& block, ad::Var x);

/// Jacobi values J_0..J_q at z for graph-valued alpha and beta (1 x 1 each).
std::vector<ad::Var> jacobi_basis(ad::Var alpha, ad::Var beta, unsigned degree, ad::Var z);

} // namespace fkan::nn
