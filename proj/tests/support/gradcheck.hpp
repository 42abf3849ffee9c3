#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mintood/model.hpp"

namespace gradcheck {

struct Stats {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;  // largest error in units of the tolerance (<= 1 passes)
  std::string worst_name;

  void merge(const Stats& other);
  bool ok() const { return failed == 0; }
};

/// rel err <= 1e-3, or abs err <= 1e-6 when both magnitudes are below 1e-3.
/// Returns the error divided by its tolerance.
double error_ratio(double analytic, double numeric);

struct Slot {
  std::string name;
  mintood::Tensor2* value;
  const mintood::Tensor2* grad;
};

/// Central differences with step h on every entry of every slot.
Stats check(const std::vector<Slot>& slots, const std::function<double()>& loss, double h = 1e-5);

/// Tiny model used by gradient and determinism tests: K = 3, widths 4/6/2.
mintood::ModelConfig tiny_config(mintood::FusionMode fusion = mintood::FusionMode::Weighted,
                                 mintood::HeadKind head = mintood::HeadKind::Cosine);

/// Glorot init plus small noise on every entry (so biases are non-zero).
mintood::ModelParams random_params(const mintood::ModelConfig& cfg, std::uint64_t seed);

/// b ID samples over >= 2 classes plus b OOD samples, normal entries.
mintood::Batch random_batch(const mintood::ModelConfig& cfg, std::size_t b, std::uint64_t seed);

// One random point each; `seed` picks parameters and inputs.
Stats objective_point(mintood::Objective objective, bool contrast, mintood::FusionMode fusion,
                      mintood::HeadKind head, std::uint64_t seed);
Stats encoder_point(mintood::Modality m, bool positional, std::uint64_t seed);
Stats fusion_point(mintood::FusionMode mode, std::uint64_t seed);
Stats contrastive_point(std::uint64_t seed);
Stats coarse_point(std::uint64_t seed);
Stats multiclass_point(mintood::HeadKind head, std::uint64_t seed);

}  // namespace gradcheck
