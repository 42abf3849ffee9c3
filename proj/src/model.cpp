#include "mintood/model.hpp"

#include <string>

#include "mintood/error.hpp"
#include "mintood/kernels.hpp"
#include "mintood/ops.hpp"

namespace mintood {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

struct SampleTraces {
  std::array<EncoderTrace, 3> modality;
};

// Encodes every sample of the batch with traces, in parallel. Row b of
// each modality matrix is sample b.
ModalityRows encode_with_traces(const ModelParams& params, const ModelConfig& cfg,
                                std::span<const Sample* const> samples,
                                std::vector<SampleTraces>* traces) {
  const std::size_t n = samples.size();
  const std::size_t dim = cfg.text_dim();
  ModalityRows rows;
  for (auto& r : rows) r = Tensor2(n, dim);
  if (traces != nullptr) traces->assign(n, SampleTraces{});

  kernels::parallel_for(n, [&](std::size_t b) {
    for (Modality m : kModalities) {
      const auto idx = static_cast<std::size_t>(m);
      EncoderTrace* trace = traces != nullptr ? &(*traces)[b].modality[idx] : nullptr;
      const Vector x = encode(samples[b]->seq(m), m, params.encoders.at(m), cfg.encoder, trace);
      std::copy(x.begin(), x.end(), rows[idx].row(b).begin());
    }
  });
  return rows;
}

void accumulate_encoder_grads(const ModelParams& params, const ModelConfig& cfg,
                              const std::vector<SampleTraces>& traces, const ModalityRows& d_rows,
                              EncoderParams& grad) {
  const std::size_t n = traces.size();
  // Per-sample buffers, reduced in sample order so the sum does not depend
  // on the thread count.
  std::vector<EncoderParams> partial(n);
  kernels::parallel_for(n, [&](std::size_t b) {
    EncoderParams local = params.encoders;
    local.visit("", [](const std::string&, Tensor2& t) { t.fill(0.0); });
    for (Modality m : kModalities) {
      const auto idx = static_cast<std::size_t>(m);
      encode_backward(traces[b].modality[idx], m, d_rows[idx].row(b), params.encoders.at(m), cfg.encoder,
                      local.at(m));
    }
    partial[b] = std::move(local);
  });
  std::vector<Tensor2*> total;
  grad.visit("", [&](const std::string&, Tensor2& t) { total.push_back(&t); });
  for (auto& p : partial) {
    std::size_t slot = 0;
    p.visit("", [&](const std::string&, Tensor2& t) {
      if (!t.empty()) *total[slot] += t;
      ++slot;
    });
  }
}

Tensor2 select_rows(const Tensor2& m, std::span<const std::size_t> rows) {
  Tensor2 out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void scatter_add_rows(Tensor2& dst, const Tensor2& src, std::span<const std::size_t> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < src.cols(); ++c) dst(rows[i], c) += src(i, c);
}

}  // namespace

std::string_view head_kind_name(HeadKind kind) { return kind == HeadKind::Cosine ? "cosine" : "linear"; }

HeadKind parse_head_kind(std::string_view name) {
  if (name == "cosine") return HeadKind::Cosine;
  if (name == "linear") return HeadKind::Linear;
  throw ParameterError("heads_losses", "unknown classifier head '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (schema.num_classes < 2) throw ParameterError("model", "num_classes must be >= 2");
  for (Modality m : kModalities) encoder.validate(schema.shape(m).dim);
  if (fusion == FusionMode::Weighted && fusion_hidden == 0) {
    throw ParameterError("fusion", "fusion_hidden (H_w) must be > 0");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("fusion", "dropout must lie in [0, 1)");
  if (!(gamma > 0.0)) throw ParameterError("heads_losses", "gamma must be > 0");
  if (!(tau > 0.0)) throw ParameterError("heads_losses", "tau must be > 0");
}

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t dt = cfg.text_dim();
  const std::size_t k = cfg.num_classes();
  ModelParams p;
  for (Modality m : kModalities)
    p.encoders.at(m) = ModalityEncoder::init(m, cfg.schema.shape(m).dim, dt, cfg.encoder, rng);
  p.fusion = FusionParams::init(cfg.fusion, dt, cfg.fusion_hidden, rng);
  p.heads.binary.hidden = Linear::glorot(dt, dt, rng);
  p.heads.binary.out = Linear::glorot(dt, 2, rng);
  if (cfg.head == HeadKind::Cosine) {
    p.heads.cosine = glorot_uniform(k, dt, rng);
  } else {
    p.heads.linear = Linear::glorot(dt, k, rng);
  }
  p.heads.contrastive = Linear::glorot(dt, cfg.projection_dim(), rng);
  return p;
}

ParamGroup group_of(std::string_view name) {
  if (starts_with(name, "encoder.")) return ParamGroup::Encoder;
  if (starts_with(name, "fusion.")) return ParamGroup::Fusion;
  if (starts_with(name, "head.binary.")) return ParamGroup::Binary;
  if (starts_with(name, "head.contrastive.")) return ParamGroup::Contrastive;
  if (starts_with(name, "head.cosine") || starts_with(name, "head.linear.")) return ParamGroup::Classifier;
  throw ParameterError("model", "unknown parameter name '" + std::string(name) + "'");
}

std::vector<NamedTensor> named_tensors(ModelParams& params) {
  std::vector<NamedTensor> out;
  params.visit([&](const std::string& name, Tensor2& t) {
    if (!t.empty()) out.push_back({name, &t, group_of(name)});
  });
  return out;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams out = params;
  out.visit([](const std::string&, Tensor2& t) { t.fill(0.0); });
  return out;
}

std::size_t parameter_count(const ModelParams& params) {
  ModelParams copy = params;
  std::size_t total = 0;
  copy.visit([&](const std::string&, Tensor2& t) { total += t.size(); });
  return total;
}

ModalityRows encode_samples(const ModelParams& params, const ModelConfig& cfg,
                            std::span<const Sample* const> samples) {
  return encode_with_traces(params, cfg, samples, nullptr);
}

Tensor2 classifier_logits(const ModelParams& params, const ModelConfig& cfg, const Tensor2& fused) {
  return cfg.head == HeadKind::Cosine ? cosine_logits(fused, params.heads.cosine, cfg.gamma)
                                      : params.heads.linear.forward(fused);
}

Features extract_features(const ModelParams& params, const ModelConfig& cfg,
                          std::span<const Sample* const> samples) {
  const ModalityRows rows = encode_samples(params, cfg, samples);
  FusionOutput fused = fuse(rows, params.fusion, cfg.fusion, cfg.dropout, nullptr);
  Features out;
  out.logits = classifier_logits(params, cfg, fused.fused);
  out.fused = std::move(fused.fused);
  out.weights = std::move(fused.weights);
  return out;
}

Features extract_features(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus,
                          std::span<const std::size_t> indices) {
  std::vector<Sample> samples;
  samples.reserve(indices.size());
  for (std::size_t i : indices) samples.push_back(sample_from_record(corpus.records[i]));
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return extract_features(params, cfg, ptrs);
}

ObjectiveValue compute_objective(const ModelParams& params, const ModelConfig& cfg,
                                 const Batch& batch, Objective objective, bool use_contrast,
                                 std::uint64_t dropout_seed, ModelParams* grad) {
  const std::size_t n = batch.size();
  if (n == 0) throw ParameterError("model", "empty batch");
  std::vector<const Sample*> ptrs;
  std::vector<int> labels;
  std::vector<std::size_t> id_rows;
  for (std::size_t b = 0; b < n; ++b) {
    ptrs.push_back(&batch.samples[b]);
    labels.push_back(batch.samples[b].label);
    if (batch.is_id[b] != 0) id_rows.push_back(b);
  }

  std::vector<SampleTraces> traces;
  const ModalityRows rows = encode_with_traces(params, cfg, ptrs, grad != nullptr ? &traces : nullptr);

  Rng dropout_rng(dropout_seed);
  const bool coarse = objective != Objective::Fine;
  const bool fine = objective != Objective::Coarse;
  const bool contrast = fine && use_contrast;

  FusionTrace trace_first;
  FusionTrace trace_second;
  const FusionOutput first = fuse(rows, params.fusion, cfg.fusion, cfg.dropout, &dropout_rng, &trace_first);
  FusionOutput second;
  if (contrast) second = fuse(rows, params.fusion, cfg.fusion, cfg.dropout, &dropout_rng, &trace_second);

  ObjectiveValue value;
  Tensor2 d_first(n, cfg.text_dim());
  Tensor2 d_second(n, cfg.text_dim());

  if (coarse) {
    const LossResult l = loss_coarse(first.fused, batch.is_id, params.heads.binary,
                                     grad != nullptr ? &grad->heads.binary : nullptr);
    value.coarse = l.value;
    d_first += l.grad;
  }

  if (fine) {
    if (id_rows.empty()) throw ParameterError("model", "fine objective needs ID samples in the batch");
    const Tensor2 z_id = select_rows(first.fused, id_rows);
    std::vector<int> id_labels;
    for (std::size_t r : id_rows) id_labels.push_back(labels[r]);
    const Tensor2 logits = classifier_logits(params, cfg, z_id);
    const LossResult l = loss_multiclass(logits, id_labels);
    value.multiclass = l.value;
    if (grad != nullptr) {
      Tensor2 dz;
      if (cfg.head == HeadKind::Cosine) {
        dz = cosine_logits_backward(z_id, params.heads.cosine, cfg.gamma, l.grad, &grad->heads.cosine);
      } else {
        dz = params.heads.linear.backward(z_id, l.grad, &grad->heads.linear);
      }
      scatter_add_rows(d_first, dz, id_rows);
    }
  }

  if (contrast) {
    const ContrastiveResult l =
        loss_contrastive(first.fused, second.fused, labels, params.heads.contrastive, cfg.tau, cfg.dropout,
                         &dropout_rng, grad != nullptr ? &grad->heads.contrastive : nullptr);
    value.contrastive = l.value;
    d_first += l.grad_first;
    d_second += l.grad_second;
  }

  value.total = value.coarse + value.multiclass + value.contrastive;
  if (grad == nullptr) return value;

  ModalityRows d_rows = fuse_backward(trace_first, d_first, params.fusion, grad->fusion);
  if (contrast) {
    const ModalityRows d_aug = fuse_backward(trace_second, d_second, params.fusion, grad->fusion);
    for (std::size_t m = 0; m < 3; ++m) d_rows[m] += d_aug[m];
  }
  accumulate_encoder_grads(params, cfg, traces, d_rows, grad->encoders);
  return value;
}

}  // namespace mintood
