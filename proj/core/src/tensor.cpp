#include "fkan/tensor.hpp"

#include "fkan/error.hpp"

#include <Eigen/Core>

#include <algorithm>

namespace fkan::ad {

std::string to_string(Shape shape)
{
    return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill)
{}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : shape_{rows, cols}, data_(data.begin(), data.end())
{
    if (data_.size() != rows * cols) {
        throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values do not fill shape " +
                         to_string(shape_));
    }
}

Tensor Tensor::uninitialized(Shape shape)
{
    Tensor t;
    t.shape_ = shape;
    t.data_.resize(shape.size());
    return t;
}

Tensor Tensor::column(std::span<const double> values)
{
    return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::row(std::span<const double> values)
{
    return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("Tensor::matrix: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(r, c, std::move(data));
}

double Tensor::item() const
{
    if (!shape_.is_scalar()) throw ShapeError("Tensor::item on shape " + to_string(shape_));
    return data_[0];
}

void Tensor::fill(double value) noexcept
{
    std::fill(data_.begin(), data_.end(), value);
}

Tensor& Tensor::operator+=(const Tensor& other)
{
    if (other.shape_ != shape_) {
        throw ShapeError("Tensor +=: " + to_string(shape_) + " vs " + to_string(other.shape_));
    }
    double* dst = data_.data();
    const double* src = other.data_.data();
    const std::size_t n = data_.size();
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
    return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b)
{
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using CMap = Eigen::Map<const Mat>;
    const std::size_t m = transpose_a ? a.cols() : a.rows();
    const std::size_t k = transpose_a ? a.rows() : a.cols();
    const std::size_t kb = transpose_b ? b.cols() : b.rows();
    const std::size_t n = transpose_b ? b.rows() : b.cols();
    if (k != kb) {
        throw ShapeError("matmul: " + to_string(a.shape()) + (transpose_a ? "^T" : "") + " * " +
                         to_string(b.shape()) + (transpose_b ? "^T" : ""));
    }
    if (m == 0 || n == 0 || k == 0) return Tensor(m, n);
    Tensor out = Tensor::uninitialized({m, n});
    const CMap ma(a.data().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    const CMap mb(b.data().data(), static_cast<Eigen::Index>(b.rows()), static_cast<Eigen::Index>(b.cols()));
    Eigen::Map<Mat> mc(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (!transpose_a && !transpose_b) {
        mc.noalias() = ma * mb;
    } else if (!transpose_a) {
        mc.noalias() = ma * mb.transpose();
    } else if (!transpose_b) {
        mc.noalias() = ma.transpose() * mb;
    } else {
        mc.noalias() = ma.transpose() * mb.transpose();
    }
    return out;
}

} // namespace fkan::ad
