#include "mintood/oodgen.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "mintood/error.hpp"

namespace mintood {

void OodGenConfig::validate() const {
  if (k < 2) throw ParameterError("oodgen", "k must be >= 2, got " + std::to_string(k));
  if (!(alpha > 0.0)) throw ParameterError("oodgen", "alpha must be > 0, got " + std::to_string(alpha));
  if (max_resample == 0) throw ParameterError("oodgen", "max_resample must be > 0");
}

Sample sample_from_record(const UtteranceRecord& rec) {
  Sample s;
  s.seqs = rec.seqs;
  s.label = rec.label;
  return s;
}

Sample mix_sources(std::span<const Sample> id_pool, std::span<const std::size_t> sources,
                   const std::array<Vector, 3>& weights) {
  Sample out;
  out.label = kOodLabel;
  for (Modality m : kModalities) {
    const auto idx = static_cast<std::size_t>(m);
    const Tensor2& first = id_pool[sources[0]].seq(m);
    Tensor2 mixed(first.rows(), first.cols());
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const Tensor2& src = id_pool[sources[j]].seq(m);
      if (!same_shape(src, first)) throw GenerationError("oodgen", "sources differ in shape");
      const double lambda = weights[idx][j];
      auto dst = mixed.values();
      const auto vals = src.values();
      for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += lambda * vals[e];
    }
    out.seqs[idx] = std::move(mixed);
  }
  return out;
}

Sample sample_pseudo_ood(std::span<const Sample> id_pool, const OodGenConfig& cfg, Rng& rng,
                         MixTrace* trace) {
  cfg.validate();
  std::set<int> classes;
  for (const auto& s : id_pool) {
    if (s.label == kOodLabel) throw GenerationError("oodgen", "ID pool contains an OOD sample");
    classes.insert(s.label);
  }
  if (classes.size() < 2) {
    throw GenerationError("oodgen", "ID pool needs >= 2 distinct classes, has " +
                                        std::to_string(classes.size()));
  }

  // Rejection-resample the index set until it spans >= 2 classes. Distinct
  // indices when the pool is large enough, otherwise with replacement.
  std::vector<std::size_t> sources(cfg.k);
  std::vector<std::size_t> pool(id_pool.size());
  bool accepted = false;
  for (std::size_t attempt = 0; attempt < cfg.max_resample && !accepted; ++attempt) {
    if (cfg.k <= pool.size()) {
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t j = 0; j < cfg.k; ++j) {
        std::swap(pool[j], pool[j + rng.uniform_index(pool.size() - j)]);
        sources[j] = pool[j];
      }
    } else {
      for (auto& s : sources) s = rng.uniform_index(id_pool.size());
    }
    const int first = id_pool[sources[0]].label;
    accepted = std::any_of(sources.begin(), sources.end(),
                           [&](std::size_t i) { return id_pool[i].label != first; });
  }
  if (!accepted) {
    throw GenerationError("oodgen", "no index set with >= 2 classes after max_resample=" +
                                        std::to_string(cfg.max_resample) + " draws");
  }

  std::array<Vector, 3> weights;
  weights[0] = dirichlet_sample(cfg.alpha, cfg.k, rng);
  for (std::size_t m = 1; m < 3; ++m)
    weights[m] = cfg.shared_weights ? weights[0] : dirichlet_sample(cfg.alpha, cfg.k, rng);

  Sample out = mix_sources(id_pool, sources, weights);
  if (trace != nullptr) {
    trace->sources = sources;
    trace->weights = weights;
  }
  return out;
}

Batch build_mixed_batch(std::span<const Sample> id_half, const OodGenConfig& cfg, Rng& rng,
                        std::vector<MixTrace>* traces) {
  if (id_half.empty()) throw GenerationError("oodgen", "empty ID half-batch");
  std::vector<Sample> samples(id_half.begin(), id_half.end());
  std::vector<int> is_id(id_half.size(), 1);
  std::vector<MixTrace> local;
  for (std::size_t i = 0; i < id_half.size(); ++i) {
    MixTrace trace;
    samples.push_back(sample_pseudo_ood(id_half, cfg, rng, &trace));
    is_id.push_back(0);
    local.push_back(std::move(trace));
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  Batch batch;
  batch.samples.reserve(order.size());
  batch.is_id.reserve(order.size());
  if (traces != nullptr) traces->clear();
  for (std::size_t pos : order) {
    batch.samples.push_back(std::move(samples[pos]));
    batch.is_id.push_back(is_id[pos]);
    if (traces != nullptr && pos >= id_half.size()) traces->push_back(local[pos - id_half.size()]);
  }
  return batch;
}

}  // namespace mintood
