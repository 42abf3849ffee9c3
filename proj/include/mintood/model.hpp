#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mintood/corpus.hpp"
#include "mintood/encoders.hpp"
#include "mintood/fusion.hpp"
#include "mintood/heads.hpp"
#include "mintood/oodgen.hpp"

namespace mintood {

enum class HeadKind { Cosine, Linear };
std::string_view head_kind_name(HeadKind kind);
HeadKind parse_head_kind(std::string_view name);

struct ModelConfig {
  CorpusSchema schema;
  EncoderConfig encoder;
  FusionMode fusion = FusionMode::Weighted;
  std::size_t fusion_hidden = 256;  // H_w
  double dropout = 0.1;
  HeadKind head = HeadKind::Cosine;
  double gamma = 16.0;
  double tau = 2.0;
  std::size_t contrastive_dim = 0;  // 0 means D_T

  std::size_t text_dim() const { return schema.shape(Modality::Text).dim; }
  std::size_t num_classes() const { return schema.num_classes; }
  std::size_t projection_dim() const { return contrastive_dim == 0 ? text_dim() : contrastive_dim; }
  void validate() const;
};

enum class ParamGroup { Encoder, Fusion, Binary, Classifier, Contrastive };

struct ModelParams {
  EncoderParams encoders;
  FusionParams fusion;
  HeadParams heads;

  static ModelParams init(const ModelConfig& cfg, Rng& rng);

  template <class F>
  void visit(F&& f) {
    encoders.visit("encoder", f);
    fusion.visit("fusion", f);
    heads.visit("head", f);
  }
};

struct NamedTensor {
  std::string name;
  Tensor2* tensor = nullptr;
  ParamGroup group = ParamGroup::Encoder;
};

/// Non-empty parameter tensors in a fixed order, tagged by group.
std::vector<NamedTensor> named_tensors(ModelParams& params);
ParamGroup group_of(std::string_view name);

/// Same layout with every tensor zeroed; used for gradients and moments.
ModelParams zeros_like(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

/// Encoded modality rows for a set of samples (evaluation mode).
ModalityRows encode_samples(const ModelParams& params, const ModelConfig& cfg,
                            std::span<const Sample* const> samples);

struct Features {
  Tensor2 fused;    // N x D_T
  Tensor2 logits;   // N x K
  Tensor2 weights;  // N x 3 (empty for concat fusion)
};

/// Logits of the configured classifier head.
Tensor2 classifier_logits(const ModelParams& params, const ModelConfig& cfg, const Tensor2& fused);

/// Evaluation-mode forward pass (no dropout), parallel over samples.
Features extract_features(const ModelParams& params, const ModelConfig& cfg,
                          std::span<const Sample* const> samples);
Features extract_features(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus,
                          std::span<const std::size_t> indices);

enum class Objective { Coarse, Fine, Joint };

struct ObjectiveValue {
  double coarse = 0.0;
  double multiclass = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

/// Training objective on one mixed batch. Coarse: binary cross-entropy on the
/// fused rows. Fine: multi-class loss on the ID rows plus (when
/// `use_contrast`) the contrastive loss over two dropout views, where the
/// augmented view re-runs fusion and the projection path with fresh masks.
/// Dropout masks are drawn from `dropout_seed`, so the value is a
/// deterministic function of the parameters. Gradients accumulate into
/// `grad` when non-null.
ObjectiveValue compute_objective(const ModelParams& params, const ModelConfig& cfg,
                                 const Batch& batch, Objective objective, bool use_contrast,
                                 std::uint64_t dropout_seed, ModelParams* grad);

}  // namespace mintood
