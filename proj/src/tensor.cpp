#include "mixcon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mixcon/error.hpp"

namespace mixcon {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ')';
    return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
    }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::row_size() const {
    if (shape_.empty() || shape_[0] == 0) return 0;
    return data_.size() / shape_[0];
}

std::span<double> Tensor::row(std::size_t i) {
    const std::size_t n = row_size();
    return std::span<double>(data_).subspan(i * n, n);
}

std::span<const double> Tensor::row(std::size_t i) const {
    const std::size_t n = row_size();
    return std::span<const double>(data_).subspan(i * n, n);
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice_rows(std::size_t first, std::size_t count) const {
    if (shape_.empty() || first + count > shape_[0]) {
        throw ShapeError("row slice out of range for shape " + shape_string(shape_));
    }
    Shape out_shape = shape_;
    out_shape[0] = count;
    const std::size_t n = row_size();
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * n);
    return Tensor(std::move(out_shape),
                  std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * n)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
    if (shape_.empty()) throw ShapeError("gather_rows on a scalar tensor");
    Shape out_shape = shape_;
    out_shape[0] = indices.size();
    Tensor out(std::move(out_shape));
    const std::size_t n = row_size();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= shape_[0]) throw ShapeError("gather index out of range");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[k] * n), n,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    return out;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor& Tensor::operator+=(const Tensor& other) {
    axpy(1.0, other);
    return *this;
}

Tensor& Tensor::operator*=(double scale) {
    for (double& v : data_) v *= scale;
    return *this;
}

void Tensor::axpy(double scale, const Tensor& other) {
    if (other.shape_ != shape_) {
        throw ShapeError("shape mismatch " + shape_string(shape_) + " vs " +
                         shape_string(other.shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    out.axpy(-1.0, b);
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace mixcon
