#include "mintood/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mintood/error.hpp"

namespace mintood {

Vector softmax(std::span<const double> v) {
  Vector out(v.size());
  if (v.empty()) return out;
  const double shift = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - shift);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) throw ParameterError("numerics", "logsumexp of an empty vector");
  const double shift = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - shift);
  return shift + std::log(total);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(std::span<const double> v, double eps) {
  Vector out(v.begin(), v.end());
  const double n = norm(v);
  if (n <= eps) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& x : out) x /= n;
  return out;
}

Vector l2_normalize_backward(std::span<const double> v, std::span<const double> grad_unit,
                             double eps) {
  Vector out(v.size(), 0.0);
  const double n = norm(v);
  if (n <= eps) return out;
  // d(v/|v|) = (I - u u^T) / |v|
  double proj = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) proj += v[i] / n * grad_unit[i];
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (grad_unit[i] - v[i] / n * proj) / n;
  return out;
}

Tensor2 softmax_rows(const Tensor2& logits) {
  Tensor2 out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const Vector p = softmax(logits.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace mintood
