#include "fkan/network.hpp"

#include "fkan/error.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fkan::nn {

using ad::Tensor;
using ad::Var;

namespace {

constexpr std::pair<std::string_view, Activation> kActivations[] = {
    {"sigmoid", Activation::Sigmoid}, {"tanh", Activation::Tanh}, {"relu", Activation::Relu},
    {"leaky_relu", Activation::LeakyRelu}, {"elu", Activation::Elu}, {"selu", Activation::Selu},
    {"gelu", Activation::Gelu}, {"silu", Activation::Silu}, {"softplus", Activation::Softplus},
    {"fjnb", Activation::Fjnb},
};

constexpr double kInf = std::numeric_limits<double>::infinity();

Tensor uniform(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double r)
{
    std::uniform_real_distribution<double> u(-r, r);
    Tensor t(rows, cols);
    for (double& v : t.data()) v = u(rng);
    return t;
}

} // namespace

std::string_view activation_name(Activation a) noexcept
{
    for (const auto& [name, value] : kActivations) {
        if (value == a) return name;
    }
    return "?";
}

Activation parse_activation(std::string_view name)
{
    if (name == "leaky-relu") return Activation::LeakyRelu;
    for (const auto& [n, value] : kActivations) {
        if (n == name) return value;
    }
    std::string options;
    for (const auto& [n, value] : kActivations) options += (options.empty() ? "" : ", ") + std::string(n);
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'; expected one of: " + options);
}

Var apply_activation(Activation a, Var x)
{
    switch (a) {
    case Activation::Sigmoid: return ad::sigmoid(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Relu: return ad::relu(x);
    case Activation::LeakyRelu: return ad::leaky_relu(x, 0.3);
    case Activation::Elu: return ad::elu(x, 1.0);
    case Activation::Selu: return ad::selu(x);
    case Activation::Gelu: return ad::gelu(x);
    case Activation::Silu: return ad::silu(x);
    case Activation::Softplus: return ad::softplus(x);
    case Activation::Fjnb: break;
    }
    throw std::invalid_argument("fjnb needs block parameters; apply it through Network");
}

void validate(const NetworkSpec& spec)
{
    const auto& w = spec.widths;
    for (std::size_t v : w) {
        if (v == 0) throw std::invalid_argument("network: widths must be positive");
    }
    if (spec.head_activation == Activation::Fjnb) throw std::invalid_argument("network: head activation cannot be fjnb");
    if (!spec.input_lo.empty() || !spec.input_hi.empty()) {
        if (w.empty() || spec.input_lo.size() != w.front() || spec.input_hi.size() != w.front()) {
            throw std::invalid_argument("network: input bounds must match the input width");
        }
        for (std::size_t i = 0; i < spec.input_lo.size(); ++i) {
            if (!(spec.input_hi[i] > spec.input_lo[i])) throw std::invalid_argument("network: empty input range");
        }
    }
    if (spec.architecture == Architecture::Sequential) {
        if (w.size() < 2) throw std::invalid_argument("sequential network needs at least input and output widths");
        const std::size_t hidden = w.size() - 2;
        if (spec.activation == Activation::Fjnb && hidden > 0 && spec.degrees.size() != 1 &&
            spec.degrees.size() != hidden) {
            throw std::invalid_argument("sequential network: " + std::to_string(spec.degrees.size()) +
                                        " degrees for " + std::to_string(hidden) + " hidden layers");
        }
    } else {
        if (w.size() < 3) throw std::invalid_argument("parallel-fusion network needs input, branch and output widths");
        if (spec.degrees.size() < 2) throw std::invalid_argument("parallel-fusion network needs at least two blocks");
    }
}

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec))
{
    validate(spec_);
    std::mt19937_64 rng(seed);
    const auto& w = spec_.widths;
    if (spec_.architecture == Architecture::Sequential) {
        const std::size_t hidden = w.size() - 2;
        for (std::size_t i = 0; i < hidden; ++i) {
            layers_.push_back(add_dense("dense" + std::to_string(i), w[i], w[i + 1], rng));
            if (spec_.activation == Activation::Fjnb) {
                const unsigned q = spec_.degrees.size() == 1 ? spec_.degrees[0] : spec_.degrees[i];
                add_block("fjnb" + std::to_string(i), w[i + 1], q, rng);
            }
        }
        layers_.push_back(add_dense("output", w[hidden], w.back(), rng));
    } else {
        const std::size_t branch = w[1];
        for (std::size_t b = 0; b < spec_.degrees.size(); ++b) {
            layers_.push_back(add_dense("branch" + std::to_string(b), w[0], branch, rng));
            add_block("fjnb" + std::to_string(b), branch, spec_.degrees[b], rng);
        }
        std::size_t in = branch * spec_.degrees.size();
        for (std::size_t i = 2; i + 1 < w.size(); ++i) {
            layers_.push_back(add_dense("head" + std::to_string(i - 2), in, w[i], rng));
            in = w[i];
        }
        layers_.push_back(add_dense("output", in, w.back(), rng));
    }
}

Network::Dense Network::add_dense(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
{
    const double r = std::sqrt(6.0 / static_cast<double>(in + out));
    Dense d{};
    d.weight = params_.add(name + ".weight", uniform(rng, in, out, r));
    d.bias = params_.add(name + ".bias", Tensor(1, out));
    return d;
}

std::size_t Network::add_block(const std::string& name, std::size_t width, unsigned degree, std::mt19937_64& rng)
{
    const double r = std::sqrt(6.0 / static_cast<double>(degree + 1 + width));
    Block b{};
    b.alpha = params_.add(name + ".alpha_raw", Tensor::scalar(0.0), kRawFloor, kInf);
    b.beta = params_.add(name + ".beta_raw", Tensor::scalar(0.0), kRawFloor, kInf);
    b.gamma = params_.add(name + ".gamma_raw", Tensor::scalar(0.0), -kGammaRawLimit, kGammaRawLimit);
    b.theta = params_.add(name + ".theta", uniform(rng, degree + 1, width, r));
    b.degree = degree;
    blocks_.push_back(b);
    return blocks_.size() - 1;
}

Var Network::dense(std::span<const Var> bound, const Dense& d, Var x) const
{
    return ad::add_bias(ad::matmul(x, bound[d.weight]), bound[d.bias]);
}

Var Network::block(std::span<const Var> bound, std::size_t index, Var x) const
{
    const Block& b = blocks_[index];
    return fjnb_forward({bound[b.alpha], bound[b.beta], bound[b.gamma], bound[b.theta], b.degree}, x);
}

Var Network::forward(ad::Graph& graph, std::span<const Var> bound, Var input) const
{
    if (bound.size() != params_.size()) {
        throw std::invalid_argument("network forward: " + std::to_string(bound.size()) + " bound leaves for " +
                                    std::to_string(params_.size()) + " parameters");
    }
    const auto& w = spec_.widths;
    if (input.shape().cols != w.front()) {
        throw ShapeError("network forward: input " + ad::to_string(input.shape()) + " but the network expects " +
                         std::to_string(w.front()) + " columns");
    }
    Var x = input;
    if (!spec_.input_lo.empty()) {
        Tensor scale(1, w.front());
        Tensor shift(1, w.front());
        for (std::size_t i = 0; i < w.front(); ++i) {
            scale[i] = 2.0 / (spec_.input_hi[i] - spec_.input_lo[i]);
            shift[i] = -1.0 - scale[i] * spec_.input_lo[i];
        }
        x = x * graph.constant(scale) + graph.constant(shift);
    }

    if (spec_.architecture == Architecture::Sequential) {
        const std::size_t hidden = w.size() - 2;
        for (std::size_t i = 0; i < hidden; ++i) {
            x = dense(bound, layers_[i], x);
            x = spec_.activation == Activation::Fjnb ? block(bound, i, x) : apply_activation(spec_.activation, x);
        }
        return dense(bound, layers_[hidden], x);
    }

    const std::size_t branches = spec_.degrees.size();
    std::vector<Var> parts;
    parts.reserve(branches);
    for (std::size_t b = 0; b < branches; ++b) parts.push_back(block(bound, b, dense(bound, layers_[b], x)));
    Var h = ad::concat_cols(parts);
    for (std::size_t i = branches; i + 1 < layers_.size(); ++i) {
        h = apply_activation(spec_.head_activation, dense(bound, layers_[i], h));
    }
    return dense(bound, layers_.back(), h);
}

Tensor Network::predict(const Tensor& input) const
{
    ad::Graph g;
    const std::vector<Var> bound = params_.bind(g);
    return forward(g, bound, g.input(input)).value();
}

EffectiveParams Network::effective(std::size_t index) const
{
    const Block& b = blocks_.at(index);
    return effective_params(params_[b.alpha].value.item(), params_[b.beta].value.item(),
                            params_[b.gamma].value.item());
}

} // namespace fkan::nn
