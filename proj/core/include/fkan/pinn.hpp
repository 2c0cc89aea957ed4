#pragma once

// Physics-informed training helpers: input derivatives through the graph,
// residual/penalty loss assembly, and the Caputo L1 operational matrix.

#include "fkan/network.hpp"
#include "fkan/optim.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fkan::pinn {

/// Lower-triangular L1 discretisation of the Caputo derivative of order
/// `order` on the grid t_i = i h, i = 0..n: (M u)_i ~ D^order u(t_i).
struct CaputoMatrix {
    double order = 0.0;
    std::size_t n = 0;
    double h = 0.0;
    ad::Tensor matrix; // (n+1) x (n+1)
};

CaputoMatrix caputo_l1_matrix(double order, std::size_t n, double h);

/// Nonzero entries as row,col,value.
void write_caputo_csv(std::ostream& out, const CaputoMatrix& m);

/// Maps an input node (rows x d) to the prediction (rows x 1).
using Model = std::function<ad::Var(ad::Graph&, ad::Var input)>;

/// Model backed by a network whose parameters are already bound.
Model network_model(const nn::Network& net, std::vector<ad::Var> bound);

/// Derivatives of nodes with respect to one column of an input node.
/// Second derivatives reuse the first, so both stay differentiable in
/// the parameters.
class InputDerivative {
  public:
    InputDerivative(ad::Graph& graph, ad::Var input, std::size_t axis);

    /// order 0 returns y itself; order > 2 throws DomainError.
    ad::Var operator()(ad::Var y, unsigned order);

  private:
    ad::TangentSweep sweep_;
};

/// The model at every grid row shifted by -delay in column 0, in the same
/// graph (shared parameters).
ad::Var delayed(ad::Graph& graph, const Model& model, const ad::Tensor& grid, double delay);

struct Residuals {
    ad::Var residual;              // one entry per collocation point
    std::vector<ad::Var> boundary; // each squared and summed
    std::vector<ad::Var> initial;
};

struct Problem {
    ad::Tensor grid; // collocation points, rows x d
    std::function<Residuals(ad::Graph&, const Model&, ad::Var grid_input)> build;
};

/// sum(residual^2) + sum(boundary^2) + sum(initial^2). Throws
/// NonFiniteError with the grid row of the first non-finite residual.
ad::Var assemble_loss(ad::Graph& graph, const Problem& problem, const Model& model);

struct TrainResult {
    optim::LbfgsResult lbfgs;
    double loss = 0.0;
};

/// Full-batch L-BFGS on the assembled loss; the network keeps the final
/// parameters.
TrainResult train(nn::Network& net, const Problem& problem, const optim::LbfgsOptions& options,
                  const optim::IterationCallback& callback = {});

/// Loss and flat gradient at the network's current parameters.
double loss_and_gradient(const nn::Network& net, const Problem& problem, std::vector<double>* gradient);

} // namespace fkan::pinn
