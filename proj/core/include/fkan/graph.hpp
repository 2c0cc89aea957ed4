#pragma once

// Reverse-mode differentiation over dense matrices, with forward-mode
// tangent sweeps that record their results back into the same graph so
// that derivatives with respect to inputs remain differentiable with
// respect to parameters.
//
// Broadcasting: binary elementwise primitives accept equal shapes, a
// 1 x 1 scalar against any shape, or a 1 x c bias row against an r x c
// array. Nothing else broadcasts.

#include "fkan/tensor.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fkan::ad {

enum class Op : std::uint8_t {
    Constant,
    Input,
    Parameter,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Pow,      // array base, 1 x 1 node exponent
    PowConst, // array base, fixed real exponent
    PowInt,   // any base, fixed integer exponent
    Neg,
    Affine, // a * x + b with fixed a, b
    Square,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sigmoid,
    LogSigmoid,
    Erf,
    Elu,
    Relu,
    LeakyRelu,
    Selu,
    Gelu,
    Silu,
    Softplus,
    Sum,
    Mean,
    SumRows,
    Broadcast,
    Concat,
    Slice,
    Reshape,
    BlockSum,
    JacobiStack,
    JacobiSeries,
};

std::string_view op_name(Op op) noexcept;

class Graph;

/// Handle to a node in a Graph. Cheap to copy; only valid while the
/// owning Graph is alive.
class Var {
  public:
    Var() = default;
    Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

    [[nodiscard]] bool valid() const noexcept { return graph_ != nullptr; }
    [[nodiscard]] Graph& graph() const noexcept { return *graph_; }
    [[nodiscard]] std::uint32_t id() const noexcept { return id_; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] Shape shape() const;
    [[nodiscard]] double item() const { return value().item(); }

  private:
    Graph* graph_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Single-threaded tape. Nodes are appended in creation order, which is a
/// topological order, so backward simply walks indices downwards.
class Graph {
  public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = delete;
    Graph& operator=(Graph&&) = delete;

    Var constant(Tensor value);
    Var constant(double value) { return constant(Tensor::scalar(value)); }
    /// Non-trainable leaf that tangent sweeps may differentiate against.
    Var input(Tensor value);
    /// Trainable leaf; backward populates its adjoint.
    Var parameter(Tensor value);

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] const Tensor& value(Var v) const { return nodes_[v.id()].value; }
    [[nodiscard]] Op op(Var v) const { return nodes_[v.id()].op; }
    [[nodiscard]] std::span<const std::uint32_t> parents(Var v) const { return nodes_[v.id()].parents; }
    [[nodiscard]] bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    /// Accumulates d(root)/d(node) into every node that depends on a
    /// parameter. The root must hold exactly one element. Previous
    /// adjoints are discarded. With keep_intermediate == false only leaf
    /// adjoints survive the sweep.
    void backward(Var root, bool keep_intermediate = true);

    /// Adjoint of the node; zeros when the node was not reached.
    [[nodiscard]] Tensor adjoint(Var v) const;
    void clear_adjoints();

    // Node construction used by the primitive functions below.
    struct NodeSpec {
        Op op;
        std::vector<std::uint32_t> parents;
        Tensor value;
        double attr = 0.0;
        double attr2 = 0.0;
        std::array<std::size_t, 4> index{};
    };
    Var record(NodeSpec spec);

  private:
    friend class TangentSweep;

    struct Node {
        Op op;
        bool requires_grad = false;
        double attr = 0.0;
        double attr2 = 0.0;
        std::array<std::size_t, 4> index{};
        std::vector<std::uint32_t> parents;
        Tensor value;
    };

    void accumulate(std::uint32_t id, Tensor grad);
    /// Adds f(i) for each flat index i of an array of shape `out` into the
    /// adjoint of `id`, summing over broadcast dimensions.
    template <class F>
    void deposit(std::uint32_t id, Shape out, F f);
    void propagate(std::uint32_t id);
    Var tangent_rule(std::uint32_t id, std::span<const Var> parent_tangents);

    // deque: references to existing nodes survive appends.
    std::deque<Node> nodes_;
    std::vector<Tensor> adjoints_;
};

/// Forward-mode derivative of graph nodes with respect to one input node
/// along a fixed seed direction. Results are ordinary graph nodes, so
/// tangent(tangent(y)) is the second directional derivative and both are
/// differentiable by Graph::backward.
class TangentSweep {
  public:
    TangentSweep(Graph& graph, Var input, Tensor seed);

    /// Returns d(node)/d(input)·seed; an all-zero constant when the node
    /// does not depend on the input.
    Var tangent(Var node);

  private:
    Graph& graph_;
    Var input_;
    // -1: not visited, -2: independent of the input, otherwise node id.
    std::vector<std::int64_t> memo_;
};

// --- primitives -----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// a + bias where bias is a 1 x c row broadcast across the rows of a.
Var add_bias(Var a, Var bias);
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
/// base^exponent for strictly positive base and a 1 x 1 exponent node.
Var pow(Var base, Var exponent);
/// base^exponent for strictly positive base.
Var pow(Var base, double exponent);
Var powi(Var base, int exponent);
Var neg(Var x);
Var affine(Var x, double scale, double shift);
Var square(Var x);
Var exp(Var x);
Var log(Var x);
Var sin(Var x);
Var cos(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
/// log(sigmoid(x)), evaluated without underflow for large negative x.
Var log_sigmoid(Var x);
Var erf(Var x);
/// x for x > 0, kappa * (e^x - 1) otherwise.
Var elu(Var x, double kappa = 1.0);
Var relu(Var x);
Var leaky_relu(Var x, double slope = 0.3);
Var selu(Var x);
Var gelu(Var x);
Var silu(Var x);
Var softplus(Var x);
Var sum(Var x);
Var mean(Var x);
/// Column sums: r x c -> 1 x c.
Var sum_rows(Var x);
/// Expands a 1 x 1 or 1 x c node to the given shape.
Var broadcast_to(Var x, Shape shape);
Var concat_cols(std::span<const Var> parts);
Var slice(Var x, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end);
Var slice_cols(Var x, std::size_t col_begin, std::size_t col_end);
/// Same values, new shape (row-major order kept).
Var reshape(Var x, Shape shape);
/// r x (w * blocks) -> r x w, summing the column blocks.
Var block_sum(Var x, std::size_t blocks);
/// Jacobi values J_0..J_degree of every element of z (r x w) for 1 x 1
/// nodes alpha, beta > -1, laid out as column blocks: r x (w * (degree+1)),
/// block k holding J_k. Differentiable in z, alpha and beta; input tangents
/// may only flow through z.
Var jacobi_stack(Var z, Var alpha, Var beta, unsigned degree);
/// Elementwise series sum_k theta(k, c) J_k(z(r, c)) for theta of shape
/// (degree+1) x w. Equals block_sum(jacobi_stack(...) * theta row) but its
/// input tangent is again a series, so derivatives stay r x w.
Var jacobi_series(Var z, Var alpha, Var beta, Var theta);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator+(Var a, double b) { return affine(a, 1.0, b); }
inline Var operator+(double a, Var b) { return affine(b, 1.0, a); }
inline Var operator-(Var a, double b) { return affine(a, 1.0, -b); }
inline Var operator-(double a, Var b) { return affine(b, -1.0, a); }
inline Var operator*(Var a, double b) { return affine(a, b, 0.0); }
inline Var operator*(double a, Var b) { return affine(b, a, 0.0); }
inline Var operator/(Var a, double b) { return affine(a, 1.0 / b, 0.0); }
Var operator/(double a, Var b);

} // namespace fkan::ad
