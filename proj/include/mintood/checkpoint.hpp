#pragma once

#include <filesystem>
#include <string_view>

#include "mintood/model.hpp"

namespace mintood {

inline constexpr std::string_view kCheckpointManifest = "checkpoint.jsonl";
inline constexpr std::string_view kCheckpointBlob = "params.f64";

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

/// Writes checkpoint.jsonl (a header with the model config, then one line per
/// non-empty tensor: name, shape, byte offset) and params.f64 (float64
/// little-endian, row-major). Returns the manifest path.
std::filesystem::path save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                                      const std::filesystem::path& dir);

/// Inverse of save_checkpoint; bit-exact. Throws FormatError on missing,
/// extra or mis-shaped tensors.
Checkpoint load_checkpoint(const std::filesystem::path& dir_or_manifest);

}  // namespace mintood
