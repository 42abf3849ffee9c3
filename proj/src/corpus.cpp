#include "mintood/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mintood/error.hpp"

namespace mintood {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kFormatTag = "mintood-corpus";
constexpr int kFormatVersion = 1;

std::string blob_name(Modality m) { return std::string(modality_name(m)) + ".f32"; }

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) |
           (bits >> 24);
  }
  return bits;
}

void append_f32(std::vector<char>& out, double value) {
  const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(value)));
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.insert(out.end(), bytes, bytes + 4);
}

double read_f32(const char* p) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, p, 4);
  return static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("corpus", "missing blob " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

[[noreturn]] void record_error(const std::string& id, const std::string& what) {
  throw FormatError("corpus", "record '" + id + "': " + what);
}

}  // namespace

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Text: return "T";
    case Modality::Video: return "V";
    case Modality::Audio: return "A";
  }
  return "?";
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw FormatError("corpus", "unknown split '" + std::string(name) + "'");
}

std::vector<std::size_t> Corpus::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == s) out.push_back(i);
  return out;
}

void validate_corpus(const Corpus& corpus) {
  const auto& schema = corpus.schema;
  if (schema.num_classes < 2) {
    throw FormatError("corpus", "num_classes must be >= 2, got " + std::to_string(schema.num_classes));
  }
  for (Modality m : kModalities) {
    const auto& s = schema.shape(m);
    if (s.length == 0 || s.dim == 0) {
      throw FormatError("corpus", "modality " + std::string(modality_name(m)) + " has an empty shape");
    }
  }
  for (const auto& rec : corpus.records) {
    if (rec.is_ood() && rec.split != Split::Test) {
      record_error(rec.id, "OOD label outside the test split (" + std::string(split_name(rec.split)) + ")");
    }
    if (!rec.is_ood() && (rec.label < 0 || rec.label >= static_cast<int>(schema.num_classes))) {
      record_error(rec.id, "label " + std::to_string(rec.label) + " outside [0, K)");
    }
    for (Modality m : kModalities) {
      const auto& s = schema.shape(m);
      const auto& seq = rec.seq(m);
      if (seq.rows() != s.length || seq.cols() != s.dim) {
        record_error(rec.id, "modality " + std::string(modality_name(m)) + " has shape " +
                                 std::to_string(seq.rows()) + "x" + std::to_string(seq.cols()) +
                                 ", expected " + std::to_string(s.length) + "x" +
                                 std::to_string(s.dim));
      }
      if (!seq.all_finite()) record_error(rec.id, "non-finite value");
    }
  }
}

fs::path save_corpus(const Corpus& corpus, const fs::path& dir) {
  validate_corpus(corpus);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("corpus", "cannot create " + dir.string() + ": " + ec.message());

  std::array<std::vector<char>, 3> blobs;
  json header = {{"format", kFormatTag}, {"version", kFormatVersion},
                 {"num_classes", corpus.schema.num_classes}, {"modalities", json::array()}};
  for (Modality m : kModalities) {
    const auto& s = corpus.schema.shape(m);
    header["modalities"].push_back(
        {{"name", modality_name(m)}, {"length", s.length}, {"dim", s.dim}, {"blob", blob_name(m)}});
  }

  std::ostringstream manifest;
  manifest << header.dump() << '\n';
  for (const auto& rec : corpus.records) {
    json offsets = json::array();
    for (Modality m : kModalities) {
      auto& blob = blobs[static_cast<std::size_t>(m)];
      offsets.push_back(blob.size());
      for (double v : rec.seq(m).values()) append_f32(blob, v);
    }
    json line = {{"id", rec.id}, {"split", split_name(rec.split)}};
    if (rec.is_ood()) {
      line["label"] = kOodToken;
    } else {
      line["label"] = rec.label;
    }
    line["offsets"] = offsets;
    manifest << line.dump() << '\n';
  }

  for (Modality m : kModalities) {
    const auto path = dir / blob_name(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const auto& blob = blobs[static_cast<std::size_t>(m)];
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("corpus", "failed writing " + path.string());
  }
  const auto manifest_path = dir / kManifestName;
  std::ofstream out(manifest_path, std::ios::trunc);
  out << manifest.str();
  if (!out) throw IoError("corpus", "failed writing " + manifest_path.string());
  return manifest_path;
}

Corpus load_corpus(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("corpus", "cannot open manifest " + manifest_path.string());
  const fs::path dir = manifest_path.parent_path();

  std::string line;
  if (!std::getline(in, line)) throw FormatError("corpus", "empty manifest");
  Corpus corpus;
  std::array<std::vector<char>, 3> blobs;
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != kFormatTag) {
      throw FormatError("corpus", "not a corpus manifest");
    }
    if (header.at("version").get<int>() != kFormatVersion) {
      throw FormatError("corpus", "unsupported manifest version");
    }
    corpus.schema.num_classes = header.at("num_classes").get<std::size_t>();
    const auto& mods = header.at("modalities");
    if (mods.size() != 3) throw FormatError("corpus", "manifest must declare 3 modalities");
    for (Modality m : kModalities) {
      const auto& entry = mods.at(static_cast<std::size_t>(m));
      if (entry.at("name").get<std::string>() != modality_name(m)) {
        throw FormatError("corpus", "modalities must be listed in T, V, A order");
      }
      auto& shape = corpus.schema.shapes[static_cast<std::size_t>(m)];
      shape.length = entry.at("length").get<std::size_t>();
      shape.dim = entry.at("dim").get<std::size_t>();
      blobs[static_cast<std::size_t>(m)] = read_file(dir / entry.at("blob").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw FormatError("corpus", std::string("malformed manifest header: ") + e.what());
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    UtteranceRecord rec;
    try {
      const json j = json::parse(line);
      rec.id = j.at("id").get<std::string>();
      try {
        rec.split = parse_split(j.at("split").get<std::string>());
      } catch (const FormatError& e) {
        record_error(rec.id, e.what());
      }
      const auto& label = j.at("label");
      if (label.is_string()) {
        if (label.get<std::string>() != kOodToken) record_error(rec.id, "unknown label string");
        rec.label = kOodLabel;
      } else {
        rec.label = label.get<int>();
      }
      const auto& offsets = j.at("offsets");
      if (offsets.size() != 3) record_error(rec.id, "expected 3 offsets");
      for (Modality m : kModalities) {
        const auto idx = static_cast<std::size_t>(m);
        const auto& shape = corpus.schema.shapes[idx];
        const auto offset = offsets.at(idx).get<std::size_t>();
        const std::size_t count = shape.length * shape.dim;
        const auto& blob = blobs[idx];
        if (offset % 4 != 0 || offset > blob.size() || blob.size() - offset < count * 4) {
          record_error(rec.id, "byte range for modality " + std::string(modality_name(m)) +
                                   " exceeds its blob");
        }
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = read_f32(blob.data() + offset + 4 * i);
        rec.seqs[idx] = Tensor2(shape.length, shape.dim, std::move(values));
      }
    } catch (const json::exception& e) {
      throw FormatError("corpus", "malformed record line '" + line.substr(0, 80) + "': " + e.what());
    }
    corpus.records.push_back(std::move(rec));
  }

  // Every blob must be consumed exactly; a size that is not a whole number of
  // rows means the declared dim disagrees with the data.
  for (Modality m : kModalities) {
    const auto idx = static_cast<std::size_t>(m);
    const std::size_t row_bytes = corpus.schema.shapes[idx].dim * 4;
    const std::size_t expected = corpus.records.size() * corpus.schema.shapes[idx].length * row_bytes;
    if (blobs[idx].size() != expected) {
      const std::string culprit = corpus.records.empty() ? "<none>" : corpus.records.back().id;
      throw FormatError("corpus", "blob " + blob_name(m) + " holds " +
                                      std::to_string(blobs[idx].size()) + " bytes, manifest implies " +
                                      std::to_string(expected) + " (last record '" + culprit +
                                      "'); row length disagrees with declared dim");
    }
  }
  validate_corpus(corpus);
  return corpus;
}

void SynthConfig::validate() const {
  if (num_classes < 2) {
    throw ParameterError("corpus", "synth.num_classes must be >= 2, got " + std::to_string(num_classes));
  }
  for (Modality m : kModalities) {
    const auto& mod = modalities[static_cast<std::size_t>(m)];
    const std::string name(modality_name(m));
    if (mod.shape.length == 0 || mod.shape.dim == 0) {
      throw ParameterError("corpus", "synth modality " + name + " needs length > 0 and dim > 0");
    }
    if (mod.noise < 0.0 || mod.radius < 0.0 || mod.noise_skew < 0.0) {
      throw ParameterError("corpus", "synth modality " + name + " has a negative radius/noise/skew");
    }
  }
  if (test_ood_count > 0 && ood_clusters == 0) {
    throw ParameterError("corpus", "synth.ood_clusters must be > 0 when test_ood_count > 0");
  }
}

Corpus synth_corpus(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  Corpus corpus;
  corpus.schema.num_classes = cfg.num_classes;
  for (Modality m : kModalities)
    corpus.schema.shapes[static_cast<std::size_t>(m)] = cfg.modalities[static_cast<std::size_t>(m)].shape;

  auto sphere_point = [&rng](std::size_t dim, double radius) {
    Vector v(dim);
    double n = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    } while (n == 0.0);
    for (double& x : v) x *= radius / n;
    return v;
  };

  // means[m][cluster]; ID classes first, then OOD clusters.
  const std::size_t clusters = cfg.num_classes + cfg.ood_clusters;
  std::array<std::vector<Vector>, 3> means;
  for (Modality m : kModalities) {
    const auto& mod = cfg.modalities[static_cast<std::size_t>(m)];
    for (std::size_t c = 0; c < clusters; ++c)
      means[static_cast<std::size_t>(m)].push_back(sphere_point(mod.shape.dim, mod.radius));
  }

  auto emit = [&](const std::string& id, Split split, int label, std::size_t cluster, std::size_t disguise) {
    UtteranceRecord rec;
    rec.id = id;
    rec.split = split;
    rec.label = label;
    for (Modality m : kModalities) {
      const auto idx = static_cast<std::size_t>(m);
      const auto& mod = cfg.modalities[idx];
      const std::size_t c = mod.ood_visible ? cluster : disguise;
      const double sigma = mod.noise * (1.0 + mod.noise_skew * static_cast<double>(c));
      Tensor2 seq(mod.shape.length, mod.shape.dim);
      for (std::size_t t = 0; t < mod.shape.length; ++t)
        for (std::size_t d = 0; d < mod.shape.dim; ++d) {
          const double v = means[idx][c][d] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
          seq(t, d) = static_cast<double>(static_cast<float>(v));
        }
      rec.seqs[idx] = std::move(seq);
    }
    corpus.records.push_back(std::move(rec));
  };

  const std::pair<Split, std::size_t> id_splits[] = {
      {Split::Train, cfg.train_count}, {Split::Valid, cfg.valid_count}, {Split::Test, cfg.test_id_count}};
  for (const auto& [split, count] : id_splits) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t cls = i % cfg.num_classes;
      emit(std::string(split_name(split)) + "-" + std::to_string(i), split, static_cast<int>(cls), cls, cls);
    }
  }
  for (std::size_t i = 0; i < cfg.test_ood_count; ++i) {
    emit("ood-" + std::to_string(i), Split::Test, kOodLabel, cfg.num_classes + i % cfg.ood_clusters,
         i % cfg.num_classes);
  }
  return corpus;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> train_indices,
                                                   std::size_t batch_size, Rng& rng) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ParameterError("corpus", "batch_size must be even and >= 2, got " + std::to_string(batch_size));
  }
  if (batch_size > 2 * train_indices.size()) {
    throw ParameterError("corpus", "batch_size " + std::to_string(batch_size) + " exceeds 2x the " +
                                       std::to_string(train_indices.size()) + " train records");
  }
  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t half = batch_size / 2;
  std::vector<std::vector<std::size_t>> chunks;
  for (std::size_t start = 0; start + half <= order.size(); start += half)
    chunks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(start + half));
  return chunks;
}

}  // namespace mintood
