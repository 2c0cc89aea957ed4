#include "fkan/pinn.hpp"

#include "fkan/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace fkan::pinn {

using ad::Graph;
using ad::Tensor;
using ad::Var;

CaputoMatrix caputo_l1_matrix(double order, std::size_t n, double h)
{
    if (!(order > 0.0 && order < 1.0)) {
        throw DomainError("caputo: order must lie in (0, 1), got " + std::to_string(order));
    }
    if (n < 1) throw DomainError("caputo: need at least one step");
    if (!(h > 0.0)) throw DomainError("caputo: step must be positive");
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kd = static_cast<double>(k);
        b[k] = std::pow(kd + 1.0, 1.0 - order) - std::pow(kd, 1.0 - order);
    }
    const double c = std::pow(h, -order) / std::tgamma(2.0 - order);
    CaputoMatrix m{order, n, h, Tensor(n + 1, n + 1)};
    for (std::size_t row = 1; row <= n; ++row) {
        for (std::size_t j = 0; j <= row; ++j) {
            double v = 0.0;
            if (j >= 1) v += b[row - j];
            if (j + 1 <= row) v -= b[row - 1 - j];
            m.matrix(row, j) = c * v;
        }
    }
    return m;
}

void write_caputo_csv(std::ostream& out, const CaputoMatrix& m)
{
    out << "row,col,value\n";
    char buf[80];
    for (std::size_t r = 0; r < m.matrix.rows(); ++r) {
        for (std::size_t c = 0; c < m.matrix.cols(); ++c) {
            const double v = m.matrix(r, c);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", r, c, v);
            out << buf;
        }
    }
}

Model network_model(const nn::Network& net, std::vector<Var> bound)
{
    return [&net, bound = std::move(bound)](Graph& g, Var input) { return net.forward(g, bound, input); };
}

namespace {

Tensor axis_seed(Var input, std::size_t axis)
{
    const ad::Shape s = input.shape();
    if (axis >= s.cols) {
        throw ShapeError("input derivative: axis " + std::to_string(axis) + " of " + ad::to_string(s));
    }
    Tensor seed(s);
    for (std::size_t r = 0; r < s.rows; ++r) seed(r, axis) = 1.0;
    return seed;
}

} // namespace

InputDerivative::InputDerivative(Graph& graph, Var input, std::size_t axis)
    : sweep_(graph, input, axis_seed(input, axis))
{
}

Var InputDerivative::operator()(Var y, unsigned order)
{
    switch (order) {
    case 0: return y;
    case 1: return sweep_.tangent(y);
    case 2: return sweep_.tangent(sweep_.tangent(y));
    default: throw DomainError("input derivative: order " + std::to_string(order) + " above 2");
    }
}

Var delayed(Graph& graph, const Model& model, const Tensor& grid, double delay)
{
    Tensor shifted = grid;
    for (std::size_t r = 0; r < shifted.rows(); ++r) shifted(r, 0) -= delay;
    return model(graph, graph.constant(std::move(shifted)));
}

Var assemble_loss(Graph& graph, const Problem& problem, const Model& model)
{
    if (problem.grid.empty()) throw ShapeError("assemble loss: empty grid");
    const Var input = graph.input(problem.grid);
    const Residuals parts = problem.build(graph, model, input);
    const auto rv = parts.residual.value().data();
    for (std::size_t i = 0; i < rv.size(); ++i) {
        if (!std::isfinite(rv[i])) {
            throw NonFiniteError("non-finite residual at grid point", i / parts.residual.shape().cols);
        }
    }
    Var loss = ad::sum(ad::square(parts.residual));
    for (const auto* terms : {&parts.boundary, &parts.initial}) {
        for (Var t : *terms) {
            for (double v : t.value().data()) {
                if (!std::isfinite(v)) throw NonFiniteError("non-finite boundary or initial penalty", 0);
            }
            loss = loss + ad::sum(ad::square(t));
        }
    }
    return loss;
}

double loss_and_gradient(const nn::Network& net, const Problem& problem, std::vector<double>* gradient)
{
    Graph g;
    const std::vector<Var> bound = net.parameters().bind(g);
    const Var loss = assemble_loss(g, problem, network_model(net, bound));
    if (gradient) {
        g.backward(loss, false);
        *gradient = nn::gather_gradient(g, bound);
    }
    return loss.item();
}

TrainResult train(nn::Network& net, const Problem& problem, const optim::LbfgsOptions& options,
                  const optim::IterationCallback& callback)
{
    const optim::Objective objective = [&](std::span<const double> x, std::span<double> grad) {
        net.parameters().assign(x);
        std::vector<double> g;
        double f = 0.0;
        try {
            f = loss_and_gradient(net, problem, &g);
        } catch (const NonFiniteError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        }
        std::copy(g.begin(), g.end(), grad.begin());
        return f;
    };
    TrainResult r;
    r.lbfgs = optim::lbfgs_minimize(objective, net.parameters().flatten(), options, callback);
    net.parameters().assign(r.lbfgs.x);
    r.loss = r.lbfgs.loss;
    return r;
}

} // namespace fkan::pinn
