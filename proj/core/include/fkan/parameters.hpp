#pragma once

#include "fkan/graph.hpp"

#include <limits>
#include <string>
#include <vector>

namespace fkan::nn {

struct NamedTensor {
    std::string name;
    ad::Tensor value;
    // Box constraint applied by assign() and clamp().
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered collection of named trainable arrays.
class ParameterSet {
  public:
    std::size_t add(std::string name, ad::Tensor value);
    std::size_t add(std::string name, ad::Tensor value, double lower, double upper);

    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    /// Total scalar count.
    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] const NamedTensor& operator[](std::size_t i) const { return items_[i]; }
    [[nodiscard]] NamedTensor& operator[](std::size_t i) { return items_[i]; }
    [[nodiscard]] const std::vector<NamedTensor>& items() const noexcept { return items_; }

    /// Index of the named entry; throws std::out_of_range when absent.
    [[nodiscard]] std::size_t index(const std::string& name) const;

    [[nodiscard]] std::vector<double> flatten() const;
    /// Copies flat values in, clamped to each entry's bounds.
    void assign(std::span<const double> flat);
    void clamp();

    /// Registers every entry as a parameter leaf of the graph.
    [[nodiscard]] std::vector<ad::Var> bind(ad::Graph& graph) const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

  private:
    std::vector<NamedTensor> items_;
};

/// Flattens the adjoints of bound leaves in parameter order.
std::vector<double> gather_gradient(const ad::Graph& graph, std::span<const ad::Var> bound);

} // namespace fkan::nn
