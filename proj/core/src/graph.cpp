#include "fkan/graph.hpp"

#include "fkan/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fkan::ad {

namespace {

constexpr double kSeluScale = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

enum class Fit : std::uint8_t { Same, Scalar, Row };

Fit fit(Shape operand, Shape out)
{
    if (operand == out) return Fit::Same;
    if (operand.is_scalar()) return Fit::Scalar;
    return Fit::Row;
}

Shape broadcast_shape(std::string_view name, Shape a, Shape b)
{
    if (a == b) return a;
    if (a.is_scalar()) return b;
    if (b.is_scalar()) return a;
    if (a.rows == 1 && a.cols == b.cols) return b;
    if (b.rows == 1 && b.cols == a.cols) return a;
    throw ShapeError(std::string(name) + ": shapes " + to_string(a) + " and " + to_string(b) +
                     " do not broadcast");
}

// Operand offset for flat output index i in column c.
inline std::size_t at(Fit f, std::size_t i, std::size_t c)
{
    switch (f) {
    case Fit::Same: return i;
    case Fit::Scalar: return 0;
    case Fit::Row: return c;
    }
    return 0;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, Shape out, F f)
{
    Tensor r = Tensor::uninitialized(out);
    const Fit fa = fit(a.shape(), out);
    const Fit fb = fit(b.shape(), out);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pr = r.data().data();
    const std::size_t n = out.size();
    if (fa == Fit::Same && fb == Fit::Same) {
        for (std::size_t i = 0; i < n; ++i) pr[i] = f(pa[i], pb[i]);
    } else if (fa == Fit::Same && fb == Fit::Scalar) {
        const double s = pb[0];
        for (std::size_t i = 0; i < n; ++i) pr[i] = f(pa[i], s);
    } else if (fa == Fit::Scalar && fb == Fit::Same) {
        const double s = pa[0];
        for (std::size_t i = 0; i < n; ++i) pr[i] = f(s, pb[i]);
    } else {
        const std::size_t cols = out.cols;
        for (std::size_t row = 0, i = 0; row < out.rows; ++row) {
            for (std::size_t c = 0; c < cols; ++c, ++i) pr[i] = f(pa[at(fa, i, c)], pb[at(fb, i, c)]);
        }
    }
    return r;
}

template <class F>
Tensor map(const Tensor& x, F f)
{
    Tensor r = Tensor::uninitialized(x.shape());
    const double* px = x.data().data();
    double* pr = r.data().data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) pr[i] = f(px[i]);
    return r;
}

inline double sigmoid_scalar(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus_scalar(double x)
{
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double log_sigmoid_scalar(double x)
{
    return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

inline double gelu_scalar(double x)
{
    return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
}

inline double gelu_grad_scalar(double x)
{
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
    return cdf + x * pdf;
}

Var unary(Op op, Var x, Tensor value, double attr = 0.0)
{
    return x.graph().record({op, {x.id()}, std::move(value), attr});
}

template <class F>
Var binary(Op op, std::string_view name, Var a, Var b, F f)
{
    if (&a.graph() != &b.graph()) throw std::invalid_argument(std::string(name) + ": nodes from different graphs");
    const Shape out = broadcast_shape(name, a.shape(), b.shape());
    Tensor value = zip(a.value(), b.value(), out, f);
    return a.graph().record({op, {a.id(), b.id()}, std::move(value)});
}

Tensor mask(const Tensor& x, double on, double off, bool inclusive)
{
    return map(x, [=](double v) { return (inclusive ? v >= 0.0 : v > 0.0) ? on : off; });
}


// Recurrence coefficients for J_{n+1} = (a z + b) J_n - c J_{n-1} with
// their partial derivatives in alpha and beta.
struct StepCoeffs {
    double a, b, c;
    double a_al, b_al, c_al;
    double a_be, b_be, c_be;
};

StepCoeffs step_coeffs(double al, double be, unsigned n)
{
    // Tiny forward-mode dual numbers over (alpha, beta).
    struct D {
        double v, da, db;
        D operator+(D o) const { return {v + o.v, da + o.da, db + o.db}; }
        D operator-(D o) const { return {v - o.v, da - o.da, db - o.db}; }
        D operator*(D o) const { return {v * o.v, da * o.v + v * o.da, db * o.v + v * o.db}; }
        D operator/(D o) const
        {
            const double q = v / o.v;
            return {q, (da - q * o.da) / o.v, (db - q * o.db) / o.v};
        }
    };
    auto k = [](double x) { return D{x, 0.0, 0.0}; };
    const D a{al, 1.0, 0.0};
    const D b{be, 0.0, 1.0};
    const double nd = n;
    const D ab = a + b;
    const D s = ab + k(2.0 * nd);
    const D den = k(2.0 * (nd + 1.0)) * (ab + k(nd + 1.0));
    const D ca = (s + k(1.0)) * (s + k(2.0)) / den;
    const D cb = (a * a - b * b) * (s + k(1.0)) / (den * s);
    const D cc = k(2.0) * (a + k(nd)) * (b + k(nd)) * (s + k(2.0)) / (den * s);
    return {ca.v, cb.v, cc.v, ca.da, cb.da, cc.da, ca.db, cb.db, cc.db};
}

void jacobi_values(double al, double be, unsigned q, std::span<const StepCoeffs> co, double z, double* j)
{
    j[0] = 1.0;
    if (q == 0) return;
    j[1] = ((al + be + 2.0) * z + (al - be)) / 2.0;
    for (unsigned n = 1; n < q; ++n) {
        const StepCoeffs& c = co[n];
        j[n + 1] = (c.a * z + c.b) * j[n] - c.c * j[n - 1];
    }
}

Tensor jacobi_stack_value(const Tensor& z, double al, double be, unsigned q)
{
    const std::size_t rows = z.rows();
    const std::size_t w = z.cols();
    const std::size_t width = w * (q + 1);
    std::vector<StepCoeffs> co(q + 1);
    for (unsigned n = 1; n < q; ++n) co[n] = step_coeffs(al, be, n);
    Tensor out = Tensor::uninitialized({rows, width});
    double j[64];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            jacobi_values(al, be, q, co, z(r, c), j);
            double* dst = out.data().data() + r * width + c;
            for (unsigned k = 0; k <= q; ++k) dst[k * w] = j[k];
        }
    }
    return out;
}

Tensor jacobi_series_value(const Tensor& z, double al, double be, const Tensor& theta)
{
    const auto q = static_cast<unsigned>(theta.rows() - 1);
    const std::size_t rows = z.rows();
    const std::size_t w = z.cols();
    std::vector<StepCoeffs> co(q + 1);
    for (unsigned n = 1; n < q; ++n) co[n] = step_coeffs(al, be, n);
    Tensor out = Tensor::uninitialized(z.shape());
    double j[64];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            jacobi_values(al, be, q, co, z(r, c), j);
            double acc = 0.0;
            for (unsigned k = 0; k <= q; ++k) acc += theta(k, c) * j[k];
            out(r, c) = acc;
        }
    }
    return out;
}

void check_jacobi_params(const char* who, Var alpha, Var beta)
{
    if (!alpha.shape().is_scalar() || !beta.shape().is_scalar()) {
        throw ShapeError(std::string(who) + ": alpha " + to_string(alpha.shape()) + " and beta " +
                         to_string(beta.shape()) + " must be 1x1");
    }
    const double al = alpha.value()[0];
    const double be = beta.value()[0];
    if (!(al > -1.0) || !(be > -1.0)) {
        throw DomainError(std::string(who) + ": alpha and beta must exceed -1, got " + std::to_string(al) + ", " +
                          std::to_string(be));
    }
}

} // namespace

std::string_view op_name(Op op) noexcept
{
    switch (op) {
    case Op::Constant: return "constant";
    case Op::Input: return "input";
    case Op::Parameter: return "parameter";
    case Op::Add: return "add";
    case Op::Sub: return "subtract";
    case Op::Mul: return "multiply";
    case Op::Div: return "divide";
    case Op::MatMul: return "matmul";
    case Op::Pow: return "pow";
    case Op::PowConst: return "pow";
    case Op::PowInt: return "powi";
    case Op::Neg: return "neg";
    case Op::Affine: return "affine";
    case Op::Square: return "square";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::LogSigmoid: return "log_sigmoid";
    case Op::Erf: return "erf";
    case Op::Elu: return "elu";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Selu: return "selu";
    case Op::Gelu: return "gelu";
    case Op::Silu: return "silu";
    case Op::Softplus: return "softplus";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumRows: return "sum_rows";
    case Op::Broadcast: return "broadcast";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Reshape: return "reshape";
    case Op::BlockSum: return "block_sum";
    case Op::JacobiStack: return "jacobi_stack";
    case Op::JacobiSeries: return "jacobi_series";
    }
    return "?";
}

const Tensor& Var::value() const { return graph_->value(*this); }
Shape Var::shape() const { return graph_->value(*this).shape(); }

// --- Graph ------------------------------------------------------------------

Var Graph::constant(Tensor value) { return record({Op::Constant, {}, std::move(value)}); }
Var Graph::input(Tensor value) { return record({Op::Input, {}, std::move(value)}); }
Var Graph::parameter(Tensor value) { return record({Op::Parameter, {}, std::move(value)}); }

Var Graph::record(NodeSpec spec)
{
    Node node;
    node.op = spec.op;
    node.attr = spec.attr;
    node.attr2 = spec.attr2;
    node.index = spec.index;
    node.requires_grad = spec.op == Op::Parameter;
    for (std::uint32_t p : spec.parents) node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
    node.parents = std::move(spec.parents);
    node.value = std::move(spec.value);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor Graph::adjoint(Var v) const
{
    if (v.id() < adjoints_.size() && !adjoints_[v.id()].empty()) return adjoints_[v.id()];
    return Tensor(nodes_[v.id()].value.shape());
}

void Graph::clear_adjoints() { adjoints_.clear(); }

template <class F>
void Graph::deposit(std::uint32_t id, Shape out, F f)
{
    const Shape ps = nodes_[id].value.shape();
    Tensor& slot = adjoints_[id];
    const std::size_t rows = out.rows;
    const std::size_t cols = out.cols;
    if (ps == out) {
        if (slot.empty()) {
            slot = Tensor::uninitialized(ps);
            double* d = slot.data().data();
            for (std::size_t r = 0, i = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c, ++i) d[i] = f(i, c);
            }
        } else {
            double* d = slot.data().data();
            for (std::size_t r = 0, i = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c, ++i) d[i] += f(i, c);
            }
        }
        return;
    }
    if (slot.empty()) slot = Tensor(ps);
    double* d = slot.data().data();
    if (ps.is_scalar()) {
        double acc = 0.0;
        for (std::size_t r = 0, i = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c, ++i) acc += f(i, c);
        }
        d[0] += acc;
    } else {
        for (std::size_t r = 0, i = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c, ++i) d[c] += f(i, c);
        }
    }
}

void Graph::accumulate(std::uint32_t id, Tensor grad)
{
    assert(grad.shape() == nodes_[id].value.shape());
    Tensor& slot = adjoints_[id];
    if (slot.empty()) {
        slot = std::move(grad);
    } else {
        slot += grad;
    }
}

void Graph::backward(Var root, bool keep_intermediate)
{
    const Shape rs = value(root).shape();
    if (rs.size() != 1) throw ShapeError("backward: root must hold one element, got " + to_string(rs));
    adjoints_.assign(nodes_.size(), Tensor{});
    adjoints_[root.id()] = Tensor(rs, 1.0);
    for (std::uint32_t i = root.id() + 1; i-- > 0;) {
        if (adjoints_[i].empty()) continue;
        const Node& node = nodes_[i];
        if (!node.parents.empty() && node.requires_grad) propagate(i);
        if (!keep_intermediate && !node.parents.empty()) adjoints_[i] = Tensor{};
    }
}

void Graph::propagate(std::uint32_t id)
{
    const Node& node = nodes_[id];
    const Tensor& gt = adjoints_[id];
    const double* g = gt.data().data();
    const double* y = node.value.data().data();
    const Shape out = node.value.shape();
    auto pnode = [&](std::size_t k) -> const Node& { return nodes_[node.parents[k]]; };
    auto wants = [&](std::size_t k) { return pnode(k).requires_grad; };
    auto pid = [&](std::size_t k) { return node.parents[k]; };
    // Unary elementwise rule: d parent += g * f(x, y).
    auto unary_rule = [&](auto f) {
        const double* x = pnode(0).value.data().data();
        deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * f(x[i], y[i]); });
    };

    switch (node.op) {
    case Op::Constant:
    case Op::Input:
    case Op::Parameter: return;
    case Op::Add:
    case Op::Sub: {
        if (wants(0)) deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i]; });
        if (wants(1)) {
            if (node.op == Op::Add) {
                deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i]; });
            } else {
                deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return -g[i]; });
            }
        }
        return;
    }
    case Op::Mul:
    case Op::Div: {
        const Tensor& a = pnode(0).value;
        const Tensor& b = pnode(1).value;
        const Fit fa = fit(a.shape(), out);
        const Fit fb = fit(b.shape(), out);
        const double* pa = a.data().data();
        const double* pb = b.data().data();
        if (node.op == Op::Mul) {
            if (wants(0)) {
                if (fb == Fit::Same) {
                    deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * pb[i]; });
                } else {
                    deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * pb[at(fb, i, c)]; });
                }
            }
            if (wants(1)) {
                if (fa == Fit::Same) {
                    deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * pa[i]; });
                } else {
                    deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * pa[at(fa, i, c)]; });
                }
            }
        } else {
            if (wants(0)) deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] / pb[at(fb, i, c)]; });
            if (wants(1)) deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return -g[i] * y[i] / pb[at(fb, i, c)]; });
        }
        return;
    }
    case Op::MatMul: {
        const bool ta = node.index[0] != 0;
        const bool tb = node.index[1] != 0;
        const Tensor& a = pnode(0).value;
        const Tensor& b = pnode(1).value;
        if (wants(0)) accumulate(pid(0), ta ? matmul(b, gt, tb, true) : matmul(gt, b, false, !tb));
        if (wants(1)) accumulate(pid(1), tb ? matmul(gt, a, true, ta) : matmul(a, gt, !ta, false));
        return;
    }
    case Op::Pow: {
        const double* x = pnode(0).value.data().data();
        const double p = pnode(1).value[0];
        if (wants(0)) deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * p * y[i] / x[i]; });
        if (wants(1)) deposit(pid(1), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return g[i] * y[i] * std::log(x[i]); });
        return;
    }
    case Op::PowConst: {
        const double p = node.attr;
        unary_rule([p](double x, double v) { return p * v / x; });
        return;
    }
    case Op::PowInt: {
        const int n = static_cast<int>(node.attr);
        unary_rule([n](double x, double) { return n * std::pow(x, n - 1); });
        return;
    }
    case Op::Neg: deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return -g[i]; }); return;
    case Op::Affine: {
        const double a = node.attr;
        deposit(pid(0), out, [&](std::size_t i, [[maybe_unused]] std::size_t c) { return a * g[i]; });
        return;
    }
    case Op::Square: unary_rule([](double x, double) { return 2.0 * x; }); return;
    case Op::Exp: unary_rule([](double, double v) { return v; }); return;
    case Op::Log: unary_rule([](double x, double) { return 1.0 / x; }); return;
    case Op::Sin: unary_rule([](double x, double) { return std::cos(x); }); return;
    case Op::Cos: unary_rule([](double x, double) { return -std::sin(x); }); return;
    case Op::Tanh: unary_rule([](double, double v) { return 1.0 - v * v; }); return;
    case Op::Sigmoid: unary_rule([](double, double v) { return v * (1.0 - v); }); return;
    case Op::LogSigmoid: unary_rule([](double x, double) { return sigmoid_scalar(-x); }); return;
    case Op::Erf:
        unary_rule([](double x, double) { return 2.0 * std::numbers::inv_sqrtpi * std::exp(-x * x); });
        return;
    case Op::Elu: {
        const double k = node.attr;
        unary_rule([k](double x, double v) { return x >= 0.0 ? 1.0 : v + k; });
        return;
    }
    case Op::Relu: unary_rule([](double x, double) { return x > 0.0 ? 1.0 : 0.0; }); return;
    case Op::LeakyRelu: {
        const double sl = node.attr;
        unary_rule([sl](double x, double) { return x > 0.0 ? 1.0 : sl; });
        return;
    }
    case Op::Selu:
        unary_rule([](double x, double v) { return x > 0.0 ? kSeluScale : v + kSeluScale * kSeluAlpha; });
        return;
    case Op::Gelu: unary_rule([](double x, double) { return gelu_grad_scalar(x); }); return;
    case Op::Silu:
        unary_rule([](double x, double) {
            const double sg = sigmoid_scalar(x);
            return sg * (1.0 + x * (1.0 - sg));
        });
        return;
    case Op::Softplus: unary_rule([](double x, double) { return sigmoid_scalar(x); }); return;
    case Op::Sum: {
        const double g0 = g[0];
        deposit(pid(0), pnode(0).value.shape(), [g0](std::size_t, std::size_t) { return g0; });
        return;
    }
    case Op::Mean: {
        const Shape s = pnode(0).value.shape();
        const double g0 = g[0] / static_cast<double>(s.size());
        deposit(pid(0), s, [g0](std::size_t, std::size_t) { return g0; });
        return;
    }
    case Op::SumRows: {
        const Shape s = pnode(0).value.shape();
        deposit(pid(0), s, [&](std::size_t, std::size_t c) { return g[c]; });
        return;
    }
    case Op::Broadcast: deposit(pid(0), out, [&](std::size_t i, std::size_t) { return g[i]; }); return;
    case Op::Concat: {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            const Shape s = pnode(k).value.shape();
            if (wants(k)) {
                const std::size_t cols = s.cols;
                deposit(pid(k), s, [&, offset, cols](std::size_t i, std::size_t c) {
                    return g[(i / cols) * out.cols + offset + c];
                });
            }
            offset += s.cols;
        }
        return;
    }
    case Op::Slice: {
        const Shape s = pnode(0).value.shape();
        const auto [r0, r1, c0, c1] = node.index;
        const std::size_t w = c1 - c0;
        deposit(pid(0), s, [&, r0, r1, c0, c1, w](std::size_t i, std::size_t c) {
            const std::size_t r = i / s.cols;
            return (r >= r0 && r < r1 && c >= c0 && c < c1) ? g[(r - r0) * w + (c - c0)] : 0.0;
        });
        return;
    }
    case Op::Reshape: {
        const Shape s = pnode(0).value.shape();
        deposit(pid(0), s, [&](std::size_t i, std::size_t) { return g[i]; });
        return;
    }
    case Op::BlockSum: {
        const Shape s = pnode(0).value.shape();
        const std::size_t w = out.cols;
        deposit(pid(0), s, [&, w](std::size_t i, std::size_t c) {
            const std::size_t r = i / s.cols;
            return g[r * w + c % w];
        });
        return;
    }
    case Op::JacobiStack: {
        const Tensor& zt = pnode(0).value;
        const double al = pnode(1).value[0];
        const double be = pnode(2).value[0];
        const auto q = static_cast<unsigned>(node.index[0]);
        const std::size_t rows = zt.rows();
        const std::size_t w = zt.cols();
        const std::size_t width = out.cols;
        std::vector<StepCoeffs> co(q + 1);
        for (unsigned n = 1; n < q; ++n) co[n] = step_coeffs(al, be, n);
        const bool want_z = wants(0);
        Tensor gz = want_z ? Tensor::uninitialized(zt.shape()) : Tensor{};
        double g_al = 0.0;
        double g_be = 0.0;
        double j[64], jz[64], ja[64], jb[64];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const double z = zt(r, c);
                const double* gk = g + r * width + c;
                j[0] = 1.0;
                jz[0] = ja[0] = jb[0] = 0.0;
                if (q >= 1) {
                    j[1] = ((al + be + 2.0) * z + (al - be)) / 2.0;
                    jz[1] = (al + be + 2.0) / 2.0;
                    ja[1] = (z + 1.0) / 2.0;
                    jb[1] = (z - 1.0) / 2.0;
                }
                for (unsigned n = 1; n < q; ++n) {
                    const StepCoeffs& k = co[n];
                    const double lin = k.a * z + k.b;
                    j[n + 1] = lin * j[n] - k.c * j[n - 1];
                    jz[n + 1] = k.a * j[n] + lin * jz[n] - k.c * jz[n - 1];
                    ja[n + 1] = (k.a_al * z + k.b_al) * j[n] + lin * ja[n] - k.c_al * j[n - 1] - k.c * ja[n - 1];
                    jb[n + 1] = (k.a_be * z + k.b_be) * j[n] + lin * jb[n] - k.c_be * j[n - 1] - k.c * jb[n - 1];
                }
                double sz = 0.0;
                for (unsigned n = 0; n <= q; ++n) {
                    const double gn = gk[n * w];
                    sz += gn * jz[n];
                    g_al += gn * ja[n];
                    g_be += gn * jb[n];
                }
                if (want_z) gz(r, c) = sz;
            }
        }
        if (want_z) accumulate(pid(0), std::move(gz));
        if (wants(1)) accumulate(pid(1), Tensor::scalar(g_al));
        if (wants(2)) accumulate(pid(2), Tensor::scalar(g_be));
        return;
    }
    case Op::JacobiSeries: {
        const Tensor& zt = pnode(0).value;
        const double al = pnode(1).value[0];
        const double be = pnode(2).value[0];
        const Tensor& th = pnode(3).value;
        const auto q = static_cast<unsigned>(th.rows() - 1);
        const std::size_t rows = zt.rows();
        const std::size_t w = zt.cols();
        std::vector<StepCoeffs> co(q + 1);
        for (unsigned n = 1; n < q; ++n) co[n] = step_coeffs(al, be, n);
        const bool want_z = wants(0);
        const bool want_ab = wants(1) || wants(2);
        const bool want_th = wants(3);
        Tensor gz = want_z ? Tensor::uninitialized(zt.shape()) : Tensor{};
        Tensor gth = want_th ? Tensor(th.shape()) : Tensor{};
        double g_al = 0.0;
        double g_be = 0.0;
        double j[64], jz[64], ja[64], jb[64];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const double z = zt(r, c);
                const double gi = g[r * w + c];
                j[0] = 1.0;
                jz[0] = ja[0] = jb[0] = 0.0;
                if (q >= 1) {
                    j[1] = ((al + be + 2.0) * z + (al - be)) / 2.0;
                    jz[1] = (al + be + 2.0) / 2.0;
                    ja[1] = (z + 1.0) / 2.0;
                    jb[1] = (z - 1.0) / 2.0;
                }
                for (unsigned n = 1; n < q; ++n) {
                    const StepCoeffs& k = co[n];
                    const double lin = k.a * z + k.b;
                    j[n + 1] = lin * j[n] - k.c * j[n - 1];
                    jz[n + 1] = k.a * j[n] + lin * jz[n] - k.c * jz[n - 1];
                    if (want_ab) {
                        ja[n + 1] = (k.a_al * z + k.b_al) * j[n] + lin * ja[n] - k.c_al * j[n - 1] - k.c * ja[n - 1];
                        jb[n + 1] = (k.a_be * z + k.b_be) * j[n] + lin * jb[n] - k.c_be * j[n - 1] - k.c * jb[n - 1];
                    }
                }
                double sz = 0.0, sa = 0.0, sb = 0.0;
                for (unsigned n = 0; n <= q; ++n) {
                    const double t = th(n, c);
                    sz += t * jz[n];
                    if (want_ab) {
                        sa += t * ja[n];
                        sb += t * jb[n];
                    }
                    if (want_th) gth(n, c) += gi * j[n];
                }
                if (want_z) gz(r, c) = gi * sz;
                g_al += gi * sa;
                g_be += gi * sb;
            }
        }
        if (want_z) accumulate(pid(0), std::move(gz));
        if (wants(1)) accumulate(pid(1), Tensor::scalar(g_al));
        if (wants(2)) accumulate(pid(2), Tensor::scalar(g_be));
        if (want_th) accumulate(pid(3), std::move(gth));
        return;
    }
    }
}

// --- forward-mode tangents ---------------------------------------------------

Var Graph::tangent_rule(std::uint32_t id, std::span<const Var> t)
{
    // Copy what we need: recording new nodes must not observe a half-built
    // rule, and the node's own Var handles are stable.
    const Node& node = nodes_[id];
    const Op op = node.op;
    const double attr = node.attr;
    const auto index = node.index;
    std::vector<Var> in;
    in.reserve(node.parents.size());
    for (std::uint32_t p : node.parents) in.emplace_back(this, p);
    const Var y(this, id);
    auto has = [&](std::size_t k) { return t[k].valid(); };
    auto zeros_like = [&](Var v) { return constant(Tensor(v.shape())); };
    auto fit_out = [&](Var v) { return v.shape() == y.shape() ? v : broadcast_to(v, y.shape()); };

    switch (op) {
    case Op::Constant:
    case Op::Input:
    case Op::Parameter: return {};
    case Op::Add:
        if (has(0) && has(1)) return t[0] + t[1];
        return fit_out(has(0) ? t[0] : t[1]);
    case Op::Sub:
        if (has(0) && has(1)) return t[0] - t[1];
        return has(0) ? fit_out(t[0]) : fit_out(-t[1]);
    case Op::Mul: {
        Var r;
        if (has(0)) r = t[0] * in[1];
        if (has(1)) r = r.valid() ? r + in[0] * t[1] : in[0] * t[1];
        return fit_out(r);
    }
    case Op::Div: {
        Var r;
        if (has(0)) r = t[0] / in[1];
        if (has(1)) {
            Var q = (y * t[1]) / in[1];
            r = r.valid() ? r - q : -q;
        }
        return fit_out(r);
    }
    case Op::MatMul: {
        const bool ta = index[0] != 0;
        const bool tb = index[1] != 0;
        Var r;
        if (has(0)) r = matmul(t[0], in[1], ta, tb);
        if (has(1)) r = r.valid() ? r + matmul(in[0], t[1], ta, tb) : matmul(in[0], t[1], ta, tb);
        return r;
    }
    case Op::Pow: {
        Var r;
        if (has(0)) r = (in[1] * y / in[0]) * t[0];
        if (has(1)) {
            Var q = (y * log(in[0])) * t[1];
            r = r.valid() ? r + q : q;
        }
        return r;
    }
    case Op::PowConst: return (attr * (y / in[0])) * t[0];
    case Op::PowInt: {
        const int n = static_cast<int>(attr);
        if (n == 0) return zeros_like(y);
        if (n == 1) return t[0];
        return (static_cast<double>(n) * powi(in[0], n - 1)) * t[0];
    }
    case Op::Neg: return -t[0];
    case Op::Affine: return t[0] * attr;
    case Op::Square: return (2.0 * in[0]) * t[0];
    case Op::Exp: return y * t[0];
    case Op::Log: return t[0] / in[0];
    case Op::Sin: return cos(in[0]) * t[0];
    case Op::Cos: return -(sin(in[0]) * t[0]);
    case Op::Tanh: return affine(square(y), -1.0, 1.0) * t[0];
    case Op::Sigmoid: return (y * (1.0 - y)) * t[0];
    case Op::LogSigmoid: return sigmoid(-in[0]) * t[0];
    case Op::Erf: return (2.0 * std::numbers::inv_sqrtpi * exp(-square(in[0]))) * t[0];
    case Op::Elu: {
        Var on = constant(mask(in[0].value(), 1.0, 0.0, true));
        Var off = constant(mask(in[0].value(), 0.0, 1.0, true));
        return ((y + attr) * off + on) * t[0];
    }
    case Op::Relu: return constant(mask(in[0].value(), 1.0, 0.0, false)) * t[0];
    case Op::LeakyRelu: return constant(mask(in[0].value(), 1.0, attr, false)) * t[0];
    case Op::Selu: {
        Var on = constant(mask(in[0].value(), kSeluScale, 0.0, false));
        Var off = constant(mask(in[0].value(), 0.0, 1.0, false));
        return ((y + kSeluScale * kSeluAlpha) * off + on) * t[0];
    }
    case Op::Gelu: {
        Var cdf = affine(erf(in[0] * (std::numbers::sqrt2 / 2.0)), 0.5, 0.5);
        Var pdf = exp(affine(square(in[0]), -0.5, 0.0)) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
        return (cdf + in[0] * pdf) * t[0];
    }
    case Op::Silu: {
        Var s = sigmoid(in[0]);
        return (s * (1.0 + in[0] * (1.0 - s))) * t[0];
    }
    case Op::Softplus: return sigmoid(in[0]) * t[0];
    case Op::Sum: return sum(t[0]);
    case Op::Mean: return mean(t[0]);
    case Op::SumRows: return sum_rows(t[0]);
    case Op::Broadcast: return broadcast_to(t[0], y.shape());
    case Op::Concat: {
        std::vector<Var> parts;
        parts.reserve(in.size());
        for (std::size_t k = 0; k < in.size(); ++k) parts.push_back(has(k) ? t[k] : zeros_like(in[k]));
        return concat_cols(parts);
    }
    case Op::Slice: return slice(t[0], index[0], index[1], index[2], index[3]);
    case Op::Reshape: return reshape(t[0], y.shape());
    case Op::BlockSum: return block_sum(t[0], index[0]);
    case Op::JacobiStack: {
        if (has(1) || has(2)) {
            throw std::logic_error("jacobi_stack: input tangents through alpha or beta are not supported");
        }
        const auto q = static_cast<unsigned>(index[0]);
        const Shape zs = in[0].shape();
        if (q == 0) return zeros_like(y);
        // d/dz J_k^{(a,b)} = (k + a + b + 1) / 2 * J_{k-1}^{(a+1,b+1)}
        const Var lower = jacobi_stack(in[0], in[1] + 1.0, in[2] + 1.0, q - 1);
        const Var ab = in[1] + in[2];
        std::vector<Var> scale{constant(Tensor(1, zs.cols))};
        for (unsigned k = 1; k <= q; ++k) scale.push_back(broadcast_to(ab * 0.5 + 0.5 * (k + 1.0), {1, zs.cols}));
        const Var shifted = concat_cols(std::vector<Var>{constant(Tensor(zs)), lower});
        const std::vector<Var> tiles(q + 1, t[0]);
        return shifted * concat_cols(scale) * concat_cols(tiles);
    }
    case Op::JacobiSeries: {
        if (has(1) || has(2)) {
            throw std::logic_error("jacobi_series: input tangents through alpha or beta are not supported");
        }
        const Shape ts = in[3].shape();
        const std::size_t q = ts.rows - 1;
        Var out;
        if (has(0) && q > 0) {
            // sum_k theta_k (k + a + b + 1) / 2 J_{k-1}^{(a+1,b+1)}
            Tensor steps(q, 1);
            for (std::size_t k = 0; k < q; ++k) steps[k] = (k + 2.0) / 2.0;
            const Var col = broadcast_to((in[1] + in[2]) * 0.5, {q, 1}) + constant(std::move(steps));
            const Var spread = matmul(col, constant(Tensor(1, ts.cols, 1.0)));
            const Var lowered = slice(in[3], 1, q + 1, 0, ts.cols) * spread;
            out = jacobi_series(in[0], in[1] + 1.0, in[2] + 1.0, lowered) * t[0];
        }
        if (has(3)) {
            const Var part = jacobi_series(in[0], in[1], in[2], t[3]);
            out = out.valid() ? out + part : part;
        }
        return out.valid() ? out : zeros_like(y);
    }
    }
    return {};
}

TangentSweep::TangentSweep(Graph& graph, Var input, Tensor seed) : graph_(graph), input_(input)
{
    if (seed.shape() != input.shape()) {
        throw ShapeError("tangent seed " + to_string(seed.shape()) + " does not match input " +
                         to_string(input.shape()));
    }
    Var s = graph_.constant(std::move(seed));
    memo_.assign(graph_.size(), -1);
    memo_[input.id()] = s.id();
}

Var TangentSweep::tangent(Var node)
{
    const std::uint32_t target = node.id();
    if (target < input_.id()) return graph_.constant(Tensor(node.shape()));
    if (memo_.size() < graph_.size()) memo_.resize(graph_.size(), -1);

    std::vector<Var> pts;
    for (std::uint32_t id = input_.id(); id <= target; ++id) {
        if (memo_[id] != -1) continue;
        const auto& parents = graph_.nodes_[id].parents;
        pts.assign(parents.size(), Var{});
        bool any = false;
        for (std::size_t k = 0; k < parents.size(); ++k) {
            const std::uint32_t p = parents[k];
            if (p < input_.id() || memo_[p] < 0) continue;
            pts[k] = Var(&graph_, static_cast<std::uint32_t>(memo_[p]));
            any = true;
        }
        if (!any) {
            memo_[id] = -2;
            continue;
        }
        Var r = graph_.tangent_rule(id, pts);
        if (memo_.size() < graph_.size()) memo_.resize(graph_.size(), -1);
        memo_[id] = r.valid() ? static_cast<std::int64_t>(r.id()) : -2;
    }
    if (memo_[target] < 0) return graph_.constant(Tensor(node.shape()));
    return Var(&graph_, static_cast<std::uint32_t>(memo_[target]));
}

// --- primitives ---------------------------------------------------------------

Var add(Var a, Var b) { return binary(Op::Add, "add", a, b, [](double u, double v) { return u + v; }); }
Var sub(Var a, Var b) { return binary(Op::Sub, "subtract", a, b, [](double u, double v) { return u - v; }); }
Var mul(Var a, Var b) { return binary(Op::Mul, "multiply", a, b, [](double u, double v) { return u * v; }); }
Var div(Var a, Var b) { return binary(Op::Div, "divide", a, b, [](double u, double v) { return u / v; }); }

Var add_bias(Var a, Var bias)
{
    const Shape sa = a.shape();
    const Shape sb = bias.shape();
    if (sb.rows != 1 || sb.cols != sa.cols) {
        throw ShapeError("broadcast-add-bias: shapes " + to_string(sa) + " and " + to_string(sb) +
                         " (bias must be 1 x " + std::to_string(sa.cols) + ")");
    }
    return add(a, bias);
}

Var operator/(double a, Var b) { return div(b.graph().constant(a), b); }

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b)
{
    Tensor value = matmul(a.value(), b.value(), transpose_a, transpose_b);
    return a.graph().record({Op::MatMul,
                             {a.id(), b.id()},
                             std::move(value),
                             0.0,
                             0.0,
                             {static_cast<std::size_t>(transpose_a), static_cast<std::size_t>(transpose_b), 0, 0}});
}

namespace {
void require_positive(std::string_view name, const Tensor& base)
{
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!(base[i] > 0.0)) {
            throw DomainError(std::string(name) + ": base must be positive, got " + std::to_string(base[i]) +
                              " at index " + std::to_string(i));
        }
    }
}
} // namespace

Var pow(Var base, Var exponent)
{
    if (!exponent.shape().is_scalar()) {
        throw ShapeError("pow: exponent must be 1x1, got " + to_string(exponent.shape()));
    }
    require_positive("pow", base.value());
    const double p = exponent.value()[0];
    Tensor value = map(base.value(), [p](double x) { return std::pow(x, p); });
    return base.graph().record({Op::Pow, {base.id(), exponent.id()}, std::move(value)});
}

Var pow(Var base, double exponent)
{
    require_positive("pow", base.value());
    return unary(Op::PowConst, base, map(base.value(), [exponent](double x) { return std::pow(x, exponent); }),
                 exponent);
}

Var powi(Var base, int exponent)
{
    return unary(Op::PowInt, base, map(base.value(), [exponent](double x) { return std::pow(x, exponent); }),
                 static_cast<double>(exponent));
}

Var neg(Var x) { return unary(Op::Neg, x, map(x.value(), [](double v) { return -v; })); }

Var affine(Var x, double scale, double shift)
{
    Tensor value = map(x.value(), [scale, shift](double v) { return scale * v + shift; });
    return x.graph().record({Op::Affine, {x.id()}, std::move(value), scale, shift});
}

Var square(Var x) { return unary(Op::Square, x, map(x.value(), [](double v) { return v * v; })); }
Var exp(Var x) { return unary(Op::Exp, x, map(x.value(), [](double v) { return std::exp(v); })); }

Var log(Var x)
{
    require_positive("log", x.value());
    return unary(Op::Log, x, map(x.value(), [](double v) { return std::log(v); }));
}

Var sin(Var x) { return unary(Op::Sin, x, map(x.value(), [](double v) { return std::sin(v); })); }
Var cos(Var x) { return unary(Op::Cos, x, map(x.value(), [](double v) { return std::cos(v); })); }
Var tanh(Var x) { return unary(Op::Tanh, x, map(x.value(), [](double v) { return std::tanh(v); })); }
Var sigmoid(Var x) { return unary(Op::Sigmoid, x, map(x.value(), sigmoid_scalar)); }
Var log_sigmoid(Var x) { return unary(Op::LogSigmoid, x, map(x.value(), log_sigmoid_scalar)); }
Var erf(Var x) { return unary(Op::Erf, x, map(x.value(), [](double v) { return std::erf(v); })); }

Var elu(Var x, double kappa)
{
    return unary(Op::Elu, x, map(x.value(), [kappa](double v) { return v > 0.0 ? v : kappa * std::expm1(v); }),
                 kappa);
}

Var relu(Var x) { return unary(Op::Relu, x, map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; })); }

Var leaky_relu(Var x, double slope)
{
    return unary(Op::LeakyRelu, x, map(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), slope);
}

Var selu(Var x)
{
    return unary(Op::Selu, x, map(x.value(), [](double v) {
                     return v > 0.0 ? kSeluScale * v : kSeluScale * kSeluAlpha * std::expm1(v);
                 }));
}

Var gelu(Var x) { return unary(Op::Gelu, x, map(x.value(), gelu_scalar)); }
Var silu(Var x) { return unary(Op::Silu, x, map(x.value(), [](double v) { return v * sigmoid_scalar(v); })); }
Var softplus(Var x) { return unary(Op::Softplus, x, map(x.value(), softplus_scalar)); }

Var sum(Var x)
{
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    return unary(Op::Sum, x, Tensor::scalar(s));
}

Var mean(Var x)
{
    const Tensor& v = x.value();
    if (v.empty()) throw ShapeError("mean: empty operand");
    double s = 0.0;
    for (double e : v.data()) s += e;
    return unary(Op::Mean, x, Tensor::scalar(s / static_cast<double>(v.size())));
}

Var sum_rows(Var x)
{
    const Tensor& v = x.value();
    Tensor r(1, v.cols());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) r[j] += v(i, j);
    }
    return unary(Op::SumRows, x, std::move(r));
}

Var broadcast_to(Var x, Shape shape)
{
    const Shape s = x.shape();
    if (!(s.is_scalar() || (s.rows == 1 && s.cols == shape.cols))) {
        throw ShapeError("broadcast: cannot expand " + to_string(s) + " to " + to_string(shape));
    }
    Tensor r(shape);
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < shape.size(); ++i) r[i] = s.is_scalar() ? v[0] : v[i % shape.cols];
    return unary(Op::Broadcast, x, std::move(r));
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty()) throw ShapeError("concat: no operands");
    const std::size_t rows = parts.front().shape().rows;
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (p.shape().rows != rows) {
            throw ShapeError("concat: shapes " + to_string(parts.front().shape()) + " and " + to_string(p.shape()) +
                             " differ in rows");
        }
        cols += p.shape().cols;
    }
    Tensor r(rows, cols);
    std::vector<std::uint32_t> ids;
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < v.cols(); ++j) r(i, offset + j) = v(i, j);
        }
        offset += v.cols();
        ids.push_back(p.id());
    }
    return parts.front().graph().record({Op::Concat, std::move(ids), std::move(r)});
}

Var slice(Var x, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end)
{
    const Shape s = x.shape();
    if (row_begin >= row_end || row_end > s.rows || col_begin >= col_end || col_end > s.cols) {
        throw ShapeError("slice: range [" + std::to_string(row_begin) + "," + std::to_string(row_end) + ") x [" +
                         std::to_string(col_begin) + "," + std::to_string(col_end) + ") outside " + to_string(s));
    }
    Tensor r(row_end - row_begin, col_end - col_begin);
    const Tensor& v = x.value();
    for (std::size_t i = row_begin; i < row_end; ++i) {
        for (std::size_t j = col_begin; j < col_end; ++j) r(i - row_begin, j - col_begin) = v(i, j);
    }
    return x.graph().record(
        {Op::Slice, {x.id()}, std::move(r), 0.0, 0.0, {row_begin, row_end, col_begin, col_end}});
}

Var slice_cols(Var x, std::size_t col_begin, std::size_t col_end)
{
    return slice(x, 0, x.shape().rows, col_begin, col_end);
}

Var reshape(Var x, Shape shape)
{
    if (shape.size() != x.shape().size()) {
        throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
    }
    Tensor r = Tensor::uninitialized(shape);
    std::copy(x.value().data().begin(), x.value().data().end(), r.data().begin());
    return x.graph().record({Op::Reshape, {x.id()}, std::move(r)});
}

Var block_sum(Var x, std::size_t blocks)
{
    const Shape s = x.shape();
    if (blocks == 0 || s.cols % blocks != 0) {
        throw ShapeError("block_sum: " + to_string(s) + " does not split into " + std::to_string(blocks) + " blocks");
    }
    const std::size_t w = s.cols / blocks;
    Tensor r(s.rows, w);
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t b = 0; b < blocks; ++b) {
            for (std::size_t c = 0; c < w; ++c) r(i, c) += v(i, b * w + c);
        }
    }
    return x.graph().record({Op::BlockSum, {x.id()}, std::move(r), 0.0, 0.0, {blocks, 0, 0, 0}});
}

Var jacobi_stack(Var z, Var alpha, Var beta, unsigned degree)
{
    if (!alpha.shape().is_scalar() || !beta.shape().is_scalar()) {
        throw ShapeError("jacobi_stack: alpha " + to_string(alpha.shape()) + " and beta " + to_string(beta.shape()) +
                         " must be 1x1");
    }
    if (degree > 60) throw DomainError("jacobi_stack: degree above 60");
    const double al = alpha.value()[0];
    const double be = beta.value()[0];
    if (!(al > -1.0) || !(be > -1.0)) {
        throw DomainError("jacobi_stack: alpha and beta must exceed -1, got " + std::to_string(al) + ", " +
                          std::to_string(be));
    }
    Tensor value = jacobi_stack_value(z.value(), al, be, degree);
    return z.graph().record(
        {Op::JacobiStack, {z.id(), alpha.id(), beta.id()}, std::move(value), 0.0, 0.0, {degree, 0, 0, 0}});
}

Var jacobi_series(Var z, Var alpha, Var beta, Var theta)
{
    check_jacobi_params("jacobi_series", alpha, beta);
    const Shape ts = theta.shape();
    if (ts.rows == 0 || ts.cols != z.shape().cols) {
        throw ShapeError("jacobi_series: theta " + to_string(ts) + " against z " + to_string(z.shape()));
    }
    if (ts.rows > 61) throw DomainError("jacobi_series: degree above 60");
    Tensor value = jacobi_series_value(z.value(), alpha.value()[0], beta.value()[0], theta.value());
    return z.graph().record({Op::JacobiSeries, {z.id(), alpha.id(), beta.id(), theta.id()}, std::move(value)});
}

} // namespace fkan::ad
