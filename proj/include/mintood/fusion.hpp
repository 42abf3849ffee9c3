#pragma once

#include <array>
#include <string_view>

#include "mintood/corpus.hpp"
#include "mintood/layers.hpp"

namespace mintood {

enum class FusionMode { Weighted, Add, Concat };
std::string_view fusion_mode_name(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

/// Per-modality importance scorer: s = W2(Dropout(ReLU(W1 x))).
struct ScoreNet {
  Linear hidden;  // D_T x H_w
  Linear out;     // H_w x 1
};

struct FusionParams {
  std::array<ScoreNet, 3> scorers;  // weighted mode only
  Linear concat;                    // 3*D_T x D_T, concat mode only

  static FusionParams init(FusionMode mode, std::size_t text_dim, std::size_t hidden, Rng& rng);

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    for (Modality m : kModalities) {
      const std::string p = std::string(prefix) + ".score." + std::string(modality_name(m));
      scorers[static_cast<std::size_t>(m)].hidden.visit(p + ".hidden", f);
      scorers[static_cast<std::size_t>(m)].out.visit(p + ".out", f);
    }
    concat.visit(std::string(prefix) + ".concat", f);
  }
};

/// Encoded modality vectors, one row per sample, indexed by Modality.
using ModalityRows = std::array<Tensor2, 3>;

struct FusionTrace {
  FusionMode mode = FusionMode::Weighted;
  ModalityRows inputs;
  ModalityRows score_pre;   // W1 x + b1
  ModalityRows score_mask;  // dropout masks (all ones in eval mode)
  Tensor2 weights;          // B x 3
  Tensor2 concat_input;     // B x 3*D_T
};

struct FusionOutput {
  Tensor2 fused;    // B x D_T
  Tensor2 scores;   // B x 3 (weighted mode)
  Tensor2 weights;  // B x 3; empty for concat
};

/// Modality importance scores, B x 3. Dropout applies only when
/// `dropout_rng` is non-null (train mode).
Tensor2 modality_scores(const ModalityRows& xs, const FusionParams& params, double dropout,
                        Rng* dropout_rng, FusionTrace* trace = nullptr);

FusionOutput fuse(const ModalityRows& xs, const FusionParams& params, FusionMode mode,
                  double dropout, Rng* dropout_rng, FusionTrace* trace = nullptr);

/// Returns dL/dx per modality and accumulates parameter gradients.
ModalityRows fuse_backward(const FusionTrace& trace, const Tensor2& grad_fused,
                           const FusionParams& params, FusionParams& grad);

}  // namespace mintood
