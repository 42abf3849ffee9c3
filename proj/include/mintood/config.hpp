#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mintood/corpus.hpp"
#include "mintood/model.hpp"
#include "mintood/oodgen.hpp"
#include "mintood/training.hpp"

namespace mintood {

/// Every setting of a run. The model schema is left empty here and filled
/// from the corpus being trained on.
struct RunConfig {
  SynthConfig synth;
  std::uint64_t synth_seed = 0;
  ModelConfig model;
  TrainConfig train;
  OodGenConfig oodgen;
  std::string scorer = "mahalanobis";
  std::vector<std::uint64_t> seeds = {0};

  void validate() const;
};

/// Parses `key = value` lines grouped under [synth], [model], [train],
/// [oodgen] and [eval] headers. Unknown sections or keys raise
/// ParameterError naming them.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Writes the config back in the same format; parse_config(to_ini(c))
/// reproduces c.
std::string to_ini(const RunConfig& cfg);

enum class Ablation { Full, FusionAdd, FusionConcat, NoContrast, NoCosine, NoBinary };
inline constexpr Ablation kAllAblations[] = {Ablation::Full,       Ablation::FusionAdd, Ablation::FusionConcat,
                                             Ablation::NoContrast, Ablation::NoCosine,  Ablation::NoBinary};

std::string_view ablation_key(Ablation a);    // full, add, concat, no_contrast, no_cosine, no_binary
std::string_view ablation_label(Ablation a);  // table row label, e.g. "Fusion (Add)"
Ablation parse_ablation(std::string_view key);

/// Switches exactly the setting the variant names.
RunConfig with_ablation(RunConfig cfg, Ablation a);

}  // namespace mintood
