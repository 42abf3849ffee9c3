#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mintood/layers.hpp"

namespace mintood {

/// Binary ID/OOD classifier: two affine layers with a ReLU between.
/// Output columns are ordered (ID, OOD).
struct BinaryHead {
  Linear hidden;  // D_T x D_T
  Linear out;     // D_T x 2

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    hidden.visit(std::string(prefix) + ".hidden", f);
    out.visit(std::string(prefix) + ".out", f);
  }
};

struct HeadParams {
  BinaryHead binary;
  Tensor2 cosine;      // K x D_T class directions; empty under the linear-head ablation
  Linear linear;       // D_T x K affine head; only under the linear-head ablation
  Linear contrastive;  // D_T x D_cl projection

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    binary.visit(p + ".binary", f);
    f(p + ".cosine", cosine);
    linear.visit(p + ".linear", f);
    contrastive.visit(p + ".contrastive", f);
  }
};

inline constexpr double kLogClamp = 1e-12;

/// Loss value plus its gradient w.r.t. the rows it was computed from.
struct LossResult {
  double value = 0.0;
  Tensor2 grad;
};

/// Mean binary cross-entropy over rows of (P_ID, P_OOD); probabilities are
/// clamped to >= 1e-12 before the log.
double binary_cross_entropy(const Tensor2& probs, std::span<const int> is_id);

/// softmax(binary(z)) per row.
Tensor2 binary_probabilities(const Tensor2& z, const BinaryHead& head);

/// Coarse objective on fused rows z. Gradients for the head go to `grad`.
LossResult loss_coarse(const Tensor2& z, std::span<const int> is_id, const BinaryHead& head,
                       BinaryHead* grad);

/// gamma * <z/|z|, w_k/|w_k|> for every row of z and class k.
Tensor2 cosine_logits(const Tensor2& z, const Tensor2& class_weights, double gamma);

/// dL/dz; accumulates dL/dW into grad_weights when non-null.
Tensor2 cosine_logits_backward(const Tensor2& z, const Tensor2& class_weights, double gamma,
                               const Tensor2& grad_logits, Tensor2* grad_weights);

/// Mean softmax cross-entropy; the gradient is w.r.t. the logits. Throws
/// ContractError when a label is the OOD sentinel.
LossResult loss_multiclass(const Tensor2& logits, std::span<const int> labels);

/// Per-view labels and augmentation partners for B samples expanded to 2B
/// views (view i and i+B are the two views of sample i).
struct ContrastiveLayout {
  std::vector<int> labels;
  std::vector<std::size_t> partner;

  static ContrastiveLayout paired(std::span<const int> sample_labels);
};

/// Contrastive objective evaluated on a precomputed 2B x 2B similarity
/// matrix. ID anchors take every other same-label view as positive, OOD
/// anchors only their partner view; the sum over all 2B anchors is divided by
/// 2B. grad_sim receives dL/dsim when non-null.
double contrastive_loss_from_similarity(const Tensor2& sim, const ContrastiveLayout& layout,
                                        double tau, Tensor2* grad_sim);

/// Same objective on raw view features (rows L2-normalized first).
LossResult contrastive_loss(const Tensor2& features, const ContrastiveLayout& layout, double tau);

struct ContrastiveResult {
  double value = 0.0;
  Tensor2 grad_first;   // dL/dz for the first view
  Tensor2 grad_second;  // dL/dz for the augmented view
};

/// Full contrastive term on two fused views of the same batch: independent
/// dropout masks (when rng is non-null), the projection head, then the loss.
ContrastiveResult loss_contrastive(const Tensor2& z_first, const Tensor2& z_second,
                                   std::span<const int> labels, const Linear& projection,
                                   double tau, double dropout, Rng* rng, Linear* grad);

}  // namespace mintood
