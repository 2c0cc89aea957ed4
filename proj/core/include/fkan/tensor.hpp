#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fkan::ad {

/// Allocator that leaves elements default-initialised (i.e. uninitialised
/// for double) unless a value is supplied.
template <class T>
struct DefaultInitAllocator : std::allocator<T> {
    template <class U>
    struct rebind {
        using other = DefaultInitAllocator<U>;
    };
    using std::allocator<T>::allocator;

    template <class U>
    void construct(U* p) noexcept
    {
        ::new (static_cast<void*>(p)) U;
    }
    template <class U, class... Args>
    void construct(U* p, Args&&... args)
    {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

using Buffer = std::vector<double, DefaultInitAllocator<double>>;

struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    [[nodiscard]] constexpr std::size_t size() const noexcept { return rows * cols; }
    [[nodiscard]] constexpr bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
    friend constexpr bool operator==(Shape, Shape) = default;
};

std::string to_string(Shape shape);

/// Dense row-major matrix of doubles. Vectors are stored as n x 1 columns,
/// scalars as 1 x 1.
class Tensor {
  public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);
    explicit Tensor(Shape shape, double fill = 0.0) : Tensor(shape.rows, shape.cols, fill) {}

    /// Storage with unspecified contents, for kernels that overwrite
    /// every element.
    static Tensor uninitialized(Shape shape);

    static Tensor scalar(double value) { return Tensor(1, 1, value); }
    static Tensor column(std::span<const double> values);
    static Tensor row(std::span<const double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    [[nodiscard]] std::size_t rows() const noexcept { return shape_.rows; }
    [[nodiscard]] std::size_t cols() const noexcept { return shape_.cols; }
    [[nodiscard]] Shape shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::vector<double> vector() const { return {data_.begin(), data_.end()}; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_.cols + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_.cols + c]; }

    /// Value of a 1 x 1 tensor; throws otherwise.
    [[nodiscard]] double item() const;

    void fill(double value) noexcept;
    Tensor& operator+=(const Tensor& other);

    friend bool operator==(const Tensor&, const Tensor&) = default;

  private:
    Shape shape_{};
    Buffer data_;
};

/// Plain (non-recording) matrix product with optional transposition of
/// either operand: op(a) * op(b).
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false, bool transpose_b = false);

} // namespace fkan::ad
