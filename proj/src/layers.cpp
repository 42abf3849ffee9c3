#include "mintood/layers.hpp"

#include <cmath>

#include "mintood/error.hpp"
#include "mintood/kernels.hpp"

namespace mintood {

Tensor2 glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor2 out(rows, cols);
  for (double& v : out.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return out;
}

Linear Linear::glorot(std::size_t in, std::size_t out, Rng& rng) {
  return Linear{glorot_uniform(in, out, rng), Tensor2(1, out)};
}

Linear Linear::zeros(std::size_t in, std::size_t out) { return Linear{Tensor2(in, out), Tensor2(1, out)}; }

Tensor2 Linear::forward(const Tensor2& x) const {
  Tensor2 y = kernels::matmul(x, weight);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
  }
  return y;
}

Tensor2 Linear::backward(const Tensor2& x, const Tensor2& grad_out, Linear* grad) const {
  if (grad != nullptr) {
    grad->weight += kernels::matmul_tn(x, grad_out);
    for (std::size_t r = 0; r < grad_out.rows(); ++r)
      for (std::size_t c = 0; c < grad_out.cols(); ++c) grad->bias(0, c) += grad_out(r, c);
  }
  return kernels::matmul_nt(grad_out, weight);
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor2 relu_backward(const Tensor2& x, const Tensor2& grad_out) {
  Tensor2 out = grad_out;
  const auto pre = x.values();
  auto g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  return out;
}

Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("layers", "dropout rate must lie in [0, 1)");
  Tensor2 mask(rows, cols, 1.0);
  if (p == 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (double& v : mask.values()) v = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
  if (!same_shape(a, b)) throw ParameterError("layers", "hadamard shape mismatch");
  Tensor2 out = a;
  auto o = out.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return out;
}

Tensor2 zeros_like(const Tensor2& t) { return Tensor2(t.rows(), t.cols()); }

}  // namespace mintood
