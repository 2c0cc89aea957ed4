#include "fkan/fjnb.hpp"

#include <cmath>

namespace fkan::nn {

using ad::Var;

EffectiveParams effective_params(double alpha_raw, double beta_raw, double gamma_raw)
{
    ad::Graph g;
    return {
        ad::elu(g.constant(alpha_raw)).item(),
        ad::elu(g.constant(beta_raw)).item(),
        ad::sigmoid(g.constant(gamma_raw)).item(),
    };
}

std::vector<Var> jacobi_basis(Var alpha, Var beta, unsigned degree, Var z)
{
    ad::Graph& g = z.graph();
    std::vector<Var> j;
    j.reserve(degree + 1);
    j.push_back(g.constant(ad::Tensor(z.shape(), 1.0)));
    if (degree == 0) return j;

    const Var ab = alpha + beta;
    const Var amb = alpha - beta;
    j.push_back(z * ((ab + 2.0) * 0.5) + amb * 0.5);
    const Var diff_sq = amb * ab; // alpha^2 - beta^2
    for (unsigned n = 1; n < degree; ++n) {
        const double nd = n;
        const Var s = ab + 2.0 * nd;
        const Var inv_den = 1.0 / ((ab + (nd + 1.0)) * (2.0 * (nd + 1.0)));
        const Var a = (s + 1.0) * (s + 2.0) * inv_den;
        const Var b = diff_sq * (s + 1.0) * inv_den / s;
        const Var c = (alpha + nd) * (beta + nd) * (s + 2.0) * inv_den * 2.0 / s;
        j.push_back((z * a + b) * j[n] - j[n - 1] * c);
    }
    return j;
}

namespace {

Var fractional_input(const FjnbVars& block, Var x)
{
    // sigmoid(x)^gamma in log form: exact, and free of underflow for very
    // negative x.
    const Var gamma = ad::sigmoid(block.gamma_raw);
    return ad::affine(ad::exp(ad::log_sigmoid(x) * gamma), 2.0, -1.0);
}

} // namespace

Var fjnb_forward(const FjnbVars& block, Var x)
{
    return ad::jacobi_series(fractional_input(block, x), ad::elu(block.alpha_raw), ad::elu(block.beta_raw),
                             block.theta);
}

Var fjnb_forward_stacked(const FjnbVars& block, Var x)
{
    const Var z = fractional_input(block, x);
    const Var stack = ad::jacobi_stack(z, ad::elu(block.alpha_raw), ad::elu(block.beta_raw), block.degree);
    const std::size_t cols = stack.shape().cols;
    return ad::block_sum(stack * ad::reshape(block.theta, {1, cols}), block.degree + 1);
}

Var fjnb_forward_composed(const FjnbVars& block, Var x)
{
    const Var z = fractional_input(block, x);
    const std::vector<Var> basis = jacobi_basis(ad::elu(block.alpha_raw), ad::elu(block.beta_raw), block.degree, z);
    const std::size_t width = x.shape().cols;
    Var out = ad::broadcast_to(ad::slice(block.theta, 0, 1, 0, width), x.shape());
    for (unsigned k = 1; k <= block.degree; ++k) {
        out = out + basis[k] * ad::slice(block.theta, k, k + 1, 0, width);
    }
    return out;
}

} // namespace fkan::nn
