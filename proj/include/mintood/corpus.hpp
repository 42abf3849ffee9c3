#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mintood/random.hpp"
#include "mintood/tensor.hpp"

namespace mintood {

enum class Modality : std::uint8_t { Text = 0, Video = 1, Audio = 2 };
inline constexpr std::array<Modality, 3> kModalities = {Modality::Text, Modality::Video,
                                                        Modality::Audio};
std::string_view modality_name(Modality m);  // "T", "V", "A"

enum class Split : std::uint8_t { Train, Valid, Test };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// Class index for in-distribution records; OOD records carry kOodLabel.
inline constexpr int kOodLabel = -1;
inline constexpr std::string_view kOodToken = "__OOD__";

struct ModalityShape {
  std::size_t length = 0;  // L_M
  std::size_t dim = 0;     // D_M
  friend bool operator==(const ModalityShape&, const ModalityShape&) = default;
};

struct UtteranceRecord {
  std::string id;
  Split split = Split::Train;
  int label = 0;
  std::array<Tensor2, 3> seqs;  // indexed by Modality

  bool is_ood() const noexcept { return label == kOodLabel; }
  const Tensor2& seq(Modality m) const { return seqs[static_cast<std::size_t>(m)]; }
  Tensor2& seq(Modality m) { return seqs[static_cast<std::size_t>(m)]; }
  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct CorpusSchema {
  std::size_t num_classes = 0;  // K
  std::array<ModalityShape, 3> shapes;

  const ModalityShape& shape(Modality m) const { return shapes[static_cast<std::size_t>(m)]; }
  friend bool operator==(const CorpusSchema&, const CorpusSchema&) = default;
};

struct Corpus {
  CorpusSchema schema;
  std::vector<UtteranceRecord> records;

  std::vector<std::size_t> indices(Split s) const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Checks every record invariant: shapes match the schema, labels are in
/// range, OOD appears only in the test split. Throws FormatError naming the
/// offending record.
void validate_corpus(const Corpus& corpus);

inline constexpr std::string_view kManifestName = "manifest.jsonl";

/// Writes manifest.jsonl plus one float32 little-endian blob per modality.
/// Returns the manifest path.
std::filesystem::path save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

Corpus load_corpus(const std::filesystem::path& manifest_path);

struct SynthModality {
  ModalityShape shape;
  double radius = 5.0;      // class means drawn on a sphere of this radius
  double noise = 0.5;       // per-timestep Gaussian sigma
  double noise_skew = 0.0;  // sigma for class c is noise * (1 + noise_skew * c)
  bool ood_visible = true;  // false: OOD records look like ID class (i mod K) here
};

struct SynthConfig {
  std::size_t num_classes = 3;
  std::array<SynthModality, 3> modalities{
      SynthModality{{8, 16}, 5.0, 0.5, 0.0, true},
      SynthModality{{10, 12}, 5.0, 0.5, 0.0, true},
      SynthModality{{12, 8}, 5.0, 0.5, 0.0, true},
  };
  std::size_t train_count = 600;
  std::size_t valid_count = 200;
  std::size_t test_id_count = 200;
  std::size_t test_ood_count = 100;
  std::size_t ood_clusters = 2;

  void validate() const;
};

/// Gaussian class clusters per modality; OOD clusters only in the test
/// split. Class of the i-th record of a split is i mod K, so per-class counts
/// are deterministic. Values are rounded to float32 so save/load round-trips
/// exactly.
Corpus synth_corpus(const SynthConfig& cfg, Rng& rng);

/// One epoch of ID half-batches: a seeded permutation of `train_indices`
/// chunked into groups of batch_size / 2; the partial tail is dropped.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> train_indices,
                                                   std::size_t batch_size, Rng& rng);

}  // namespace mintood
