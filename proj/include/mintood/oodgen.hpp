#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "mintood/corpus.hpp"
#include "mintood/random.hpp"

namespace mintood {

struct OodGenConfig {
  std::size_t k = 3;          // samples mixed per pseudo-OOD example
  double alpha = 2.0;         // symmetric Dirichlet concentration
  std::size_t max_resample = 100;
  bool shared_weights = true; // one lambda for all modalities; false redraws per modality

  void validate() const;
};

/// One training example: a sequence per modality plus its label
/// (kOodLabel for pseudo-OOD).
struct Sample {
  std::array<Tensor2, 3> seqs;
  int label = 0;

  const Tensor2& seq(Modality m) const { return seqs[static_cast<std::size_t>(m)]; }
};

struct Batch {
  std::vector<Sample> samples;
  std::vector<int> is_id;  // binary target y_b: 1 = ID, 0 = OOD

  std::size_t size() const noexcept { return samples.size(); }
};

/// Provenance of one pseudo-OOD example, for instrumentation.
struct MixTrace {
  std::vector<std::size_t> sources;       // indices into the ID pool
  std::array<Vector, 3> weights;          // lambda per modality
};

Sample sample_from_record(const UtteranceRecord& rec);

/// Convex combination of k pool members drawn from >= 2 distinct classes.
/// Throws GenerationError when the pool has a single class or the resample
/// budget runs out.
Sample sample_pseudo_ood(std::span<const Sample> id_pool, const OodGenConfig& cfg, Rng& rng,
                         MixTrace* trace = nullptr);

/// Mixes fixed sources with fixed weights; the deterministic core of
/// sample_pseudo_ood.
Sample mix_sources(std::span<const Sample> id_pool, std::span<const std::size_t> sources,
                   const std::array<Vector, 3>& weights);

/// |id_half| ID samples plus as many pseudo-OOD samples, shuffled.
Batch build_mixed_batch(std::span<const Sample> id_half, const OodGenConfig& cfg, Rng& rng,
                        std::vector<MixTrace>* traces = nullptr);

}  // namespace mintood
