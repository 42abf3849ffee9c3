#include "mintood/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mintood/error.hpp"

namespace mintood {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ParameterError("numerics", "tensor data length " + std::to_string(data_.size()) +
                                         " does not match shape " + std::to_string(rows) + "x" +
                                         std::to_string(cols));
  }
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor2 Tensor2::transpose() const {
  Tensor2 out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Tensor2& Tensor2::operator+=(const Tensor2& other) {
  if (!same_shape(*this, other)) throw ParameterError("numerics", "shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor2& Tensor2::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

bool same_shape(const Tensor2& a, const Tensor2& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

}  // namespace mintood
