#pragma once

#include <string>
#include <string_view>

#include "mintood/random.hpp"
#include "mintood/tensor.hpp"

namespace mintood {

// Layers follow a forward/backward contract: backward receives the forward
// input and dL/d(output), accumulates parameter gradients into `grad` and
// returns dL/d(input).

/// Affine map y = x W + b with W stored (in x out).
struct Linear {
  Tensor2 weight;
  Tensor2 bias;  // 1 x out

  /// Uniform in +-sqrt(6 / (in + out)), zero bias.
  static Linear glorot(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  std::size_t in_dim() const noexcept { return weight.rows(); }
  std::size_t out_dim() const noexcept { return weight.cols(); }
  bool empty() const noexcept { return weight.empty(); }

  Tensor2 forward(const Tensor2& x) const;
  Tensor2 backward(const Tensor2& x, const Tensor2& grad_out, Linear* grad) const;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    f(std::string(prefix) + ".weight", weight);
    f(std::string(prefix) + ".bias", bias);
  }
};

Tensor2 glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

Tensor2 relu(const Tensor2& x);
/// dL/dx given the pre-activation x.
Tensor2 relu_backward(const Tensor2& x, const Tensor2& grad_out);

/// Inverted-dropout mask: entries 0 with probability p, else 1/(1-p).
Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);

/// Tensor with the same shape as `t`, filled with zeros.
Tensor2 zeros_like(const Tensor2& t);

}  // namespace mintood
