#pragma once

// Closed-form solutions written as graph models, for substituting into
// the physics-informed losses.

#include "fkan/experiments.hpp"
#include "fkan/gradcheck.hpp"

#include <cmath>

namespace fkan::oracle {

inline pinn::Model lane_emden_oracle(unsigned m)
{
    return [m](ad::Graph&, ad::Var x) -> ad::Var {
        const ad::Var x2 = ad::square(x);
        switch (m) {
        case 0: return 1.0 - x2 * (1.0 / 6.0);
        case 1: {
            bool has_zero = false;
            for (double v : x.value().data()) has_zero = has_zero || v == 0.0;
            if (!has_zero) return ad::sin(x) / x;
            // Taylor form near the removable singularity.
            return 1.0 - x2 * (1.0 / 6.0) + ad::powi(x, 4) * (1.0 / 120.0) - ad::powi(x, 6) * (1.0 / 5040.0);
        }
        default: return ad::pow(1.0 + x2 * (1.0 / 3.0), -0.5);
        }
    };
}

inline pinn::Model burgers_oracle(const experiments::BurgersParams& p)
{
    return [p](ad::Graph&, ad::Var x) {
        const ad::Var z = ad::slice_cols(x, 0, 1);
        const ad::Var t = ad::slice_cols(x, 1, 2);
        return p.m2 / p.m0 + (2.0 * p.m1 / p.m0) * ad::tanh(z - p.m2 * t);
    };
}

inline pinn::Model delay_oracle()
{
    return [](ad::Graph&, ad::Var x) { return ad::powi(x, 3); };
}

inline double oracle_loss(const pinn::Problem& problem, const pinn::Model& model)
{
    ad::Graph g;
    return pinn::assemble_loss(g, problem, model).item();
}

/// Gradient check of an assembled loss with respect to every network
/// parameter, at the network's current values.
inline ad::GradCheckReport pinn_grad_check(const nn::Network& net, const pinn::Problem& problem)
{
    const ad::MultiBuilder f = [&](ad::Graph& g, std::span<const ad::Var> v) {
        const std::vector<ad::Var> bound(v.begin(), v.end());
        return pinn::assemble_loss(g, problem, pinn::network_model(net, bound));
    };
    std::vector<ad::Tensor> points;
    for (const auto& it : net.parameters().items()) points.push_back(it.value);
    return ad::grad_check_report(f, points);
}

} // namespace fkan::oracle
