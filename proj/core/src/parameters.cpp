#include "fkan/parameters.hpp"

#include "fkan/error.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fkan::nn {

std::size_t ParameterSet::add(std::string name, ad::Tensor value)
{
    return add(std::move(name), std::move(value), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity());
}

std::size_t ParameterSet::add(std::string name, ad::Tensor value, double lower, double upper)
{
    for (const auto& it : items_) {
        if (it.name == name) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    }
    if (!(lower <= upper)) throw std::invalid_argument("parameter '" + name + "': empty bounds");
    items_.push_back({std::move(name), std::move(value), lower, upper});
    clamp();
    return items_.size() - 1;
}

std::size_t ParameterSet::count() const noexcept
{
    std::size_t n = 0;
    for (const auto& it : items_) n += it.value.size();
    return n;
}

std::size_t ParameterSet::index(const std::string& name) const
{
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].name == name) return i;
    }
    throw std::out_of_range("no parameter named '" + name + "'");
}

std::vector<double> ParameterSet::flatten() const
{
    std::vector<double> flat;
    flat.reserve(count());
    for (const auto& it : items_) flat.insert(flat.end(), it.value.data().begin(), it.value.data().end());
    return flat;
}

void ParameterSet::assign(std::span<const double> flat)
{
    if (flat.size() != count()) {
        throw ShapeError("parameter assign: " + std::to_string(flat.size()) + " values for " +
                         std::to_string(count()) + " parameters");
    }
    std::size_t k = 0;
    for (auto& it : items_) {
        for (double& v : it.value.data()) v = std::clamp(flat[k++], it.lower, it.upper);
    }
}

void ParameterSet::clamp()
{
    for (auto& it : items_) {
        for (double& v : it.value.data()) v = std::clamp(v, it.lower, it.upper);
    }
}

std::vector<ad::Var> ParameterSet::bind(ad::Graph& graph) const
{
    std::vector<ad::Var> out;
    out.reserve(items_.size());
    for (const auto& it : items_) out.push_back(graph.parameter(it.value));
    return out;
}

std::vector<double> gather_gradient(const ad::Graph& graph, std::span<const ad::Var> bound)
{
    std::vector<double> g;
    for (ad::Var v : bound) {
        const ad::Tensor a = graph.adjoint(v);
        g.insert(g.end(), a.data().begin(), a.data().end());
    }
    return g;
}

} // namespace fkan::nn
