#pragma once

#include "fkan/fjnb.hpp"
#include "fkan/parameters.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fkan::nn {

enum class Activation : std::uint8_t {
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu,
    Elu,
    Selu,
    Gelu,
    Silu,
    Softplus,
    Fjnb,
};

std::string_view activation_name(Activation a) noexcept;
/// Accepts the names above plus "leaky-relu"; throws listing the options.
Activation parse_activation(std::string_view name);
ad::Var apply_activation(Activation a, ad::Var x);

enum class Architecture : std::uint8_t { Sequential, ParallelFusion };

/// Sequential: widths = {in, hidden..., out}; each hidden dense layer is
/// followed by `activation` (fJNB blocks take their degree from
/// `degrees`, one entry per hidden layer or a single shared entry).
///
/// ParallelFusion: widths = {in, branch, head..., out}; one branch
/// Dense(in -> branch) + fJNB(degrees[b]) per degree, concatenated, then
/// dense head layers with `head_activation`, then a linear output.
struct NetworkSpec {
    Architecture architecture = Architecture::Sequential;
    std::vector<std::size_t> widths;
    std::vector<unsigned> degrees;
    Activation activation = Activation::Fjnb;
    Activation head_activation = Activation::Tanh;
    /// Optional per-input bounds; inputs are mapped affinely onto [-1, 1].
    std::vector<double> input_lo;
    std::vector<double> input_hi;
};

/// Throws std::invalid_argument describing the first inconsistency.
void validate(const NetworkSpec& spec);

class Network {
  public:
    Network(NetworkSpec spec, std::uint64_t seed);

    [[nodiscard]] const NetworkSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] ParameterSet& parameters() noexcept { return params_; }
    [[nodiscard]] const ParameterSet& parameters() const noexcept { return params_; }

    /// Output (rows x out) for input (rows x in), using leaves from
    /// parameters().bind(graph).
    ad::Var forward(ad::Graph& graph, std::span<const ad::Var> bound, ad::Var input) const;

    /// Convenience: plain evaluation with the current parameters.
    [[nodiscard]] ad::Tensor predict(const ad::Tensor& input) const;

    [[nodiscard]] std::size_t fjnb_count() const noexcept { return blocks_.size(); }
    [[nodiscard]] EffectiveParams effective(std::size_t block) const;

  private:
    struct Dense {
        std::size_t weight;
        std::size_t bias;
    };
    struct Block {
        std::size_t alpha;
        std::size_t beta;
        std::size_t gamma;
        std::size_t theta;
        unsigned degree;
    };

    Dense add_dense(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);
    std::size_t add_block(const std::string& name, std::size_t width, unsigned degree, std::mt19937_64& rng);
    ad::Var dense(std::span<const ad::Var> bound, const Dense& d, ad::Var x) const;
    ad::Var block(std::span<const ad::Var> bound, std::size_t index, ad::Var x) const;

    NetworkSpec spec_;
    ParameterSet params_;
    std::vector<Dense> layers_; // hidden/branch layers, head layers, output
    std::vector<Block> blocks_;
};

} // namespace fkan::nn
