#include "mintood/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "mintood/error.hpp"

namespace mintood {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr std::string_view kFormatTag = "mintood-checkpoint";
constexpr int kFormatVersion = 1;

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = (out << 8) | ((bits >> (8 * i)) & 0xffu);
    return out;
  }
  return bits;
}

ordered_json config_json(const ModelConfig& cfg) {
  ordered_json shapes = ordered_json::array();
  for (Modality m : kModalities) {
    shapes.push_back({{"name", std::string(modality_name(m))},
                      {"length", cfg.schema.shape(m).length},
                      {"dim", cfg.schema.shape(m).dim}});
  }
  return {{"num_classes", cfg.schema.num_classes},
          {"modalities", shapes},
          {"heads", cfg.encoder.heads},
          {"ffn_factor", cfg.encoder.ffn_factor},
          {"positional", cfg.encoder.positional},
          {"fusion", std::string(fusion_mode_name(cfg.fusion))},
          {"fusion_hidden", cfg.fusion_hidden},
          {"dropout", cfg.dropout},
          {"head", std::string(head_kind_name(cfg.head))},
          {"gamma", cfg.gamma},
          {"tau", cfg.tau},
          {"contrastive_dim", cfg.contrastive_dim}};
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig cfg;
  cfg.schema.num_classes = j.at("num_classes").get<std::size_t>();
  const auto& mods = j.at("modalities");
  if (!mods.is_array() || mods.size() != 3) throw FormatError("checkpoint", "expected three modality shapes");
  for (std::size_t i = 0; i < 3; ++i) {
    cfg.schema.shapes[i].length = mods[i].at("length").get<std::size_t>();
    cfg.schema.shapes[i].dim = mods[i].at("dim").get<std::size_t>();
  }
  cfg.encoder.heads = j.at("heads").get<std::size_t>();
  cfg.encoder.ffn_factor = j.at("ffn_factor").get<std::size_t>();
  cfg.encoder.positional = j.at("positional").get<bool>();
  cfg.fusion = parse_fusion_mode(j.at("fusion").get<std::string>());
  cfg.fusion_hidden = j.at("fusion_hidden").get<std::size_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.head = parse_head_kind(j.at("head").get<std::string>());
  cfg.gamma = j.at("gamma").get<double>();
  cfg.tau = j.at("tau").get<double>();
  cfg.contrastive_dim = j.at("contrastive_dim").get<std::size_t>();
  return cfg;
}

}  // namespace

fs::path save_checkpoint(const ModelParams& params, const ModelConfig& cfg, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("checkpoint", "cannot create " + dir.string() + ": " + ec.message());
  ModelParams copy = params;
  std::vector<char> blob;
  std::string manifest = ordered_json{{"format", kFormatTag}, {"version", kFormatVersion}, {"model", config_json(cfg)}}
                             .dump() +
                         "\n";
  for (const auto& t : named_tensors(copy)) {
    manifest += ordered_json{{"name", t.name},
                             {"rows", t.tensor->rows()},
                             {"cols", t.tensor->cols()},
                             {"offset", blob.size()}}
                    .dump() +
                "\n";
    for (double v : t.tensor->values()) {
      const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      char bytes[8];
      std::memcpy(bytes, &bits, 8);
      blob.insert(blob.end(), bytes, bytes + 8);
    }
  }
  const fs::path manifest_path = dir / kCheckpointManifest;
  std::ofstream m(manifest_path, std::ios::binary);
  std::ofstream b(dir / kCheckpointBlob, std::ios::binary);
  m << manifest;
  b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!m || !b) throw IoError("checkpoint", "write failed in " + dir.string());
  return manifest_path;
}

Checkpoint load_checkpoint(const fs::path& dir_or_manifest) {
  const fs::path dir = fs::is_directory(dir_or_manifest) ? dir_or_manifest : dir_or_manifest.parent_path();
  std::ifstream m(dir / kCheckpointManifest);
  if (!m) throw FormatError("checkpoint", "missing " + (dir / kCheckpointManifest).string());
  std::ifstream b(dir / kCheckpointBlob, std::ios::binary);
  if (!b) throw FormatError("checkpoint", "missing " + (dir / kCheckpointBlob).string());
  const std::vector<char> blob((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());

  std::string line;
  if (!std::getline(m, line)) throw FormatError("checkpoint", "empty manifest");
  Checkpoint ck;
  std::map<std::string, ordered_json> entries;
  try {
    const auto header = ordered_json::parse(line);
    if (header.at("format") != kFormatTag || header.at("version") != kFormatVersion) {
      throw FormatError("checkpoint", "unsupported format header");
    }
    ck.config = config_from_json(header.at("model"));
    while (std::getline(m, line)) {
      if (line.empty()) continue;
      auto e = ordered_json::parse(line);
      const std::string name = e.at("name").get<std::string>();
      if (!entries.emplace(name, std::move(e)).second) throw FormatError("checkpoint", "duplicate tensor " + name);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint", std::string("malformed manifest: ") + e.what());
  }

  // Build the expected layout, then fill it tensor by tensor.
  Rng layout_rng(0);
  ck.params = ModelParams::init(ck.config, layout_rng);
  for (const auto& t : named_tensors(ck.params)) {
    const auto it = entries.find(t.name);
    if (it == entries.end()) throw FormatError("checkpoint", "missing tensor " + t.name);
    const auto rows = it->second.at("rows").get<std::size_t>();
    const auto cols = it->second.at("cols").get<std::size_t>();
    const auto offset = it->second.at("offset").get<std::size_t>();
    if (rows != t.tensor->rows() || cols != t.tensor->cols()) {
      throw FormatError("checkpoint", "tensor " + t.name + " has shape " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + ", expected " + std::to_string(t.tensor->rows()) +
                                          "x" + std::to_string(t.tensor->cols()));
    }
    if (offset + rows * cols * 8 > blob.size()) throw FormatError("checkpoint", "tensor " + t.name + " runs past the blob");
    auto values = t.tensor->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, blob.data() + offset + 8 * i, 8);
      values[i] = std::bit_cast<double>(to_little_endian(bits));
    }
    entries.erase(it);
  }
  if (!entries.empty()) throw FormatError("checkpoint", "unexpected tensor " + entries.begin()->first);
  return ck;
}

}  // namespace mintood
