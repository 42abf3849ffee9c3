#include "mintood/heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mintood/corpus.hpp"
#include "mintood/error.hpp"
#include "mintood/kernels.hpp"
#include "mintood/ops.hpp"

namespace mintood {
namespace {

Tensor2 normalize_rows(const Tensor2& x) {
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vector u = l2_normalize(x.row(r));
    std::copy(u.begin(), u.end(), out.row(r).begin());
  }
  return out;
}

Tensor2 normalize_rows_backward(const Tensor2& x, const Tensor2& grad_unit) {
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vector g = l2_normalize_backward(x.row(r), grad_unit.row(r));
    std::copy(g.begin(), g.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

double binary_cross_entropy(const Tensor2& probs, std::span<const int> is_id) {
  if (probs.cols() != 2 || probs.rows() != is_id.size()) {
    throw ParameterError("heads_losses", "binary probabilities must be B x 2 with B labels");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    const std::size_t col = is_id[b] != 0 ? 0 : 1;
    total -= std::log(std::max(probs(b, col), kLogClamp));
  }
  return total / static_cast<double>(probs.rows());
}

Tensor2 binary_probabilities(const Tensor2& z, const BinaryHead& head) {
  return softmax_rows(head.out.forward(relu(head.hidden.forward(z))));
}

LossResult loss_coarse(const Tensor2& z, std::span<const int> is_id, const BinaryHead& head,
                       BinaryHead* grad) {
  const Tensor2 pre = head.hidden.forward(z);
  const Tensor2 act = relu(pre);
  const Tensor2 probs = softmax_rows(head.out.forward(act));
  LossResult result;
  result.value = binary_cross_entropy(probs, is_id);

  const double inv_b = 1.0 / static_cast<double>(z.rows());
  Tensor2 d_logits(z.rows(), 2);
  for (std::size_t b = 0; b < z.rows(); ++b) {
    const std::size_t col = is_id[b] != 0 ? 0 : 1;
    // The clamp is flat below 1e-12, so no gradient flows through it there.
    const bool clamped = probs(b, col) < kLogClamp;
    for (std::size_t c = 0; c < 2; ++c) {
      const double target = c == col ? 1.0 : 0.0;
      d_logits(b, c) = clamped ? 0.0 : (probs(b, c) - target) * inv_b;
    }
  }
  const Tensor2 d_act = head.out.backward(act, d_logits, grad != nullptr ? &grad->out : nullptr);
  result.grad = head.hidden.backward(z, relu_backward(pre, d_act), grad != nullptr ? &grad->hidden : nullptr);
  return result;
}

Tensor2 cosine_logits(const Tensor2& z, const Tensor2& class_weights, double gamma) {
  if (z.cols() != class_weights.cols()) {
    throw ParameterError("heads_losses", "cosine classifier width does not match feature width");
  }
  Tensor2 logits = kernels::matmul_nt(normalize_rows(z), normalize_rows(class_weights));
  logits *= gamma;
  return logits;
}

Tensor2 cosine_logits_backward(const Tensor2& z, const Tensor2& class_weights, double gamma,
                               const Tensor2& grad_logits, Tensor2* grad_weights) {
  const Tensor2 u = normalize_rows(z);
  const Tensor2 v = normalize_rows(class_weights);
  Tensor2 du = kernels::matmul(grad_logits, v);
  du *= gamma;
  if (grad_weights != nullptr) {
    Tensor2 dv = kernels::matmul_tn(grad_logits, u);
    dv *= gamma;
    *grad_weights += normalize_rows_backward(class_weights, dv);
  }
  return normalize_rows_backward(z, du);
}

LossResult loss_multiclass(const Tensor2& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) {
    throw ParameterError("heads_losses", "logits rows do not match label count");
  }
  if (logits.rows() == 0) throw ParameterError("heads_losses", "multi-class loss on an empty batch");
  const double inv_b = 1.0 / static_cast<double>(logits.rows());
  LossResult result;
  result.grad = Tensor2(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const int y = labels[b];
    if (y == kOodLabel) {
      throw ContractError("heads_losses", "multi-class loss received an OOD sample at row " + std::to_string(b));
    }
    if (y < 0 || y >= static_cast<int>(logits.cols())) {
      throw ParameterError("heads_losses", "label " + std::to_string(y) + " outside [0, K)");
    }
    const auto row = logits.row(b);
    const double lse = logsumexp(row);
    result.value -= (row[static_cast<std::size_t>(y)] - lse) * inv_b;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double p = std::exp(row[c] - lse);
      result.grad(b, c) = (p - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_b;
    }
  }
  return result;
}

ContrastiveLayout ContrastiveLayout::paired(std::span<const int> sample_labels) {
  const std::size_t b = sample_labels.size();
  ContrastiveLayout layout;
  layout.labels.resize(2 * b);
  layout.partner.resize(2 * b);
  for (std::size_t i = 0; i < b; ++i) {
    layout.labels[i] = layout.labels[i + b] = sample_labels[i];
    layout.partner[i] = i + b;
    layout.partner[i + b] = i;
  }
  return layout;
}

double contrastive_loss_from_similarity(const Tensor2& sim, const ContrastiveLayout& layout,
                                        double tau, Tensor2* grad_sim) {
  const std::size_t n = sim.rows();
  if (sim.cols() != n || layout.labels.size() != n || layout.partner.size() != n) {
    throw ParameterError("heads_losses", "similarity matrix and view layout disagree in size");
  }
  if (!(tau > 0.0)) throw ParameterError("heads_losses", "temperature tau must be > 0");
  if (n < 2) throw ParameterError("heads_losses", "contrastive loss needs >= 2 views");
  if (grad_sim != nullptr) *grad_sim = Tensor2(n, n);

  const double norm = 1.0 / static_cast<double>(n);
  double total = 0.0;
  Vector logits(n - 1);
  std::vector<std::size_t> others(n - 1);
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      others[slot] = k;
      logits[slot++] = sim(i, k) / tau;
    }
    const double lse = logsumexp(logits);

    positives.clear();
    if (layout.labels[i] == kOodLabel) {
      positives.push_back(layout.partner[i]);
    } else {
      for (std::size_t p = 0; p < n; ++p)
        if (p != i && layout.labels[p] == layout.labels[i]) positives.push_back(p);
    }
    const double inv_pos = 1.0 / static_cast<double>(positives.size());
    double term = 0.0;
    for (std::size_t p : positives) term -= (sim(i, p) / tau - lse) * inv_pos;
    total += term * norm;

    if (grad_sim != nullptr) {
      for (std::size_t s = 0; s < n - 1; ++s)
        (*grad_sim)(i, others[s]) += std::exp(logits[s] - lse) / tau * norm;
      for (std::size_t p : positives) (*grad_sim)(i, p) -= inv_pos / tau * norm;
    }
  }
  return total;
}

LossResult contrastive_loss(const Tensor2& features, const ContrastiveLayout& layout, double tau) {
  const Tensor2 unit = normalize_rows(features);
  const Tensor2 sim = kernels::matmul_nt(unit, unit);
  Tensor2 d_sim;
  LossResult result;
  result.value = contrastive_loss_from_similarity(sim, layout, tau, &d_sim);
  // sim = U U^T, so dU = (dS + dS^T) U.
  Tensor2 sym = d_sim.transpose();
  sym += d_sim;
  result.grad = normalize_rows_backward(features, kernels::matmul(sym, unit));
  return result;
}

ContrastiveResult loss_contrastive(const Tensor2& z_first, const Tensor2& z_second,
                                   std::span<const int> labels, const Linear& projection,
                                   double tau, double dropout, Rng* rng, Linear* grad) {
  if (!same_shape(z_first, z_second) || z_first.rows() != labels.size()) {
    throw ParameterError("heads_losses", "contrastive views disagree in shape or label count");
  }
  const std::size_t b = z_first.rows();
  const std::size_t dim = z_first.cols();
  const Tensor2 mask_first = rng != nullptr ? dropout_mask(b, dim, dropout, *rng) : Tensor2(b, dim, 1.0);
  const Tensor2 mask_second = rng != nullptr ? dropout_mask(b, dim, dropout, *rng) : Tensor2(b, dim, 1.0);

  Tensor2 stacked(2 * b, dim);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      stacked(r, c) = z_first(r, c) * mask_first(r, c);
      stacked(r + b, c) = z_second(r, c) * mask_second(r, c);
    }
  const Tensor2 features = projection.forward(stacked);
  const LossResult loss = contrastive_loss(features, ContrastiveLayout::paired(labels), tau);
  const Tensor2 d_stacked = projection.backward(stacked, loss.grad, grad);

  ContrastiveResult result;
  result.value = loss.value;
  result.grad_first = Tensor2(b, dim);
  result.grad_second = Tensor2(b, dim);
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      result.grad_first(r, c) = d_stacked(r, c) * mask_first(r, c);
      result.grad_second(r, c) = d_stacked(r + b, c) * mask_second(r, c);
    }
  return result;
}

}  // namespace mintood
