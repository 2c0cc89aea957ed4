#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fkan {

/// Operand shapes do not satisfy a primitive's broadcasting rule.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// A NaN or infinity was produced or supplied where a finite value is required.
class NonFiniteError : public std::runtime_error {
  public:
    NonFiniteError(const std::string& what, std::size_t index)
        : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    [[nodiscard]] std::size_t index() const noexcept { return index_; }

  private:
    std::size_t index_;
};

} // namespace fkan
