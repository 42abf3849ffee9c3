#include "mintood/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mintood/error.hpp"
#include "mintood/scoring.hpp"

namespace mintood {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ParameterError("cli", "config key '" + key + "': cannot read '" + value + "' as " + expected);
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad_value(key, s, "a non-negative integer");
  return v;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) bad_value(key, s, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, s, "a number");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  bad_value(key, s, "a boolean");
}

std::vector<std::uint64_t> to_list(const std::string& key, const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) bad_value(key, s, "a comma-separated integer list");
    out.push_back(to_u64(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) bad_value(key, s, "a comma-separated integer list");
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// One entry per accepted key: a setter from text and a getter back to text.
struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field size_field(T RunConfig::*group, std::size_t T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*group).*member = static_cast<std::size_t>(to_u64(k, v));
          },
          [=](const RunConfig& c) { return std::to_string((c.*group).*member); }};
}

template <class T>
Field real_field(T RunConfig::*group, double T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*member = to_double(k, v); },
          [=](const RunConfig& c) { return fmt((c.*group).*member); }};
}

template <class T>
Field bool_field(T RunConfig::*group, bool T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*member = to_bool(k, v); },
          [=](const RunConfig& c) { return std::string((c.*group).*member ? "true" : "false"); }};
}

Field modality_field(std::size_t m, int which) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            auto& mod = c.synth.modalities[m];
            switch (which) {
              case 0: mod.shape.length = to_u64(k, v); break;
              case 1: mod.shape.dim = to_u64(k, v); break;
              case 2: mod.radius = to_double(k, v); break;
              case 3: mod.noise = to_double(k, v); break;
              case 4: mod.noise_skew = to_double(k, v); break;
              default: mod.ood_visible = to_bool(k, v); break;
            }
          },
          [=](const RunConfig& c) {
            const auto& mod = c.synth.modalities[m];
            switch (which) {
              case 0: return std::to_string(mod.shape.length);
              case 1: return std::to_string(mod.shape.dim);
              case 2: return fmt(mod.radius);
              case 3: return fmt(mod.noise);
              case 4: return fmt(mod.noise_skew);
              default: return std::string(mod.ood_visible ? "true" : "false");
            }
          }};
}

using Schema = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>;

const Schema& schema() {
  static const Schema s = [] {
    Schema out;
    std::vector<std::pair<std::string, Field>> synth = {
        {"num_classes", size_field(&RunConfig::synth, &SynthConfig::num_classes)},
        {"train_count", size_field(&RunConfig::synth, &SynthConfig::train_count)},
        {"valid_count", size_field(&RunConfig::synth, &SynthConfig::valid_count)},
        {"test_id_count", size_field(&RunConfig::synth, &SynthConfig::test_id_count)},
        {"test_ood_count", size_field(&RunConfig::synth, &SynthConfig::test_ood_count)},
        {"ood_clusters", size_field(&RunConfig::synth, &SynthConfig::ood_clusters)},
        {"seed", {[](RunConfig& c, const std::string& k, const std::string& v) { c.synth_seed = to_u64(k, v); },
                  [](const RunConfig& c) { return std::to_string(c.synth_seed); }}},
    };
    const char* attrs[] = {"length", "dim", "radius", "noise", "noise_skew", "ood_visible"};
    for (Modality m : kModalities)
      for (int a = 0; a < 6; ++a)
        synth.emplace_back(std::string(modality_name(m)) + "_" + attrs[a],
                           modality_field(static_cast<std::size_t>(m), a));
    out.emplace_back("synth", std::move(synth));

    out.emplace_back(
        "model",
        std::vector<std::pair<std::string, Field>>{
            {"heads", {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.encoder.heads = to_u64(k, v); },
                       [](const RunConfig& c) { return std::to_string(c.model.encoder.heads); }}},
            {"ffn_factor",
             {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.encoder.ffn_factor = to_u64(k, v); },
              [](const RunConfig& c) { return std::to_string(c.model.encoder.ffn_factor); }}},
            {"positional",
             {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.encoder.positional = to_bool(k, v); },
              [](const RunConfig& c) { return std::string(c.model.encoder.positional ? "true" : "false"); }}},
            {"fusion", {[](RunConfig& c, const std::string&, const std::string& v) { c.model.fusion = parse_fusion_mode(v); },
                        [](const RunConfig& c) { return std::string(fusion_mode_name(c.model.fusion)); }}},
            {"fusion_hidden", size_field(&RunConfig::model, &ModelConfig::fusion_hidden)},
            {"dropout", real_field(&RunConfig::model, &ModelConfig::dropout)},
            {"head", {[](RunConfig& c, const std::string&, const std::string& v) { c.model.head = parse_head_kind(v); },
                      [](const RunConfig& c) { return std::string(head_kind_name(c.model.head)); }}},
            {"gamma", real_field(&RunConfig::model, &ModelConfig::gamma)},
            {"tau", real_field(&RunConfig::model, &ModelConfig::tau)},
            {"contrastive_dim", size_field(&RunConfig::model, &ModelConfig::contrastive_dim)},
        });

    out.emplace_back(
        "train",
        std::vector<std::pair<std::string, Field>>{
            {"batch_size", size_field(&RunConfig::train, &TrainConfig::batch_size)},
            {"epochs", size_field(&RunConfig::train, &TrainConfig::epochs)},
            {"stage1_fraction", real_field(&RunConfig::train, &TrainConfig::stage1_fraction)},
            {"learning_rate", real_field(&RunConfig::train, &TrainConfig::learning_rate)},
            {"weight_decay", real_field(&RunConfig::train, &TrainConfig::weight_decay)},
            {"beta1", real_field(&RunConfig::train, &TrainConfig::beta1)},
            {"beta2", real_field(&RunConfig::train, &TrainConfig::beta2)},
            {"adam_eps", real_field(&RunConfig::train, &TrainConfig::adam_eps)},
            {"patience", size_field(&RunConfig::train, &TrainConfig::patience)},
            {"seeds", {[](RunConfig& c, const std::string& k, const std::string& v) { c.seeds = to_list(k, v); },
                       [](const RunConfig& c) { return fmt_list(c.seeds); }}},
            {"no_contrast", bool_field(&RunConfig::train, &TrainConfig::no_contrast)},
            {"no_binary", bool_field(&RunConfig::train, &TrainConfig::no_binary)},
            {"joint_objective", bool_field(&RunConfig::train, &TrainConfig::joint_objective)},
        });

    out.emplace_back("oodgen", std::vector<std::pair<std::string, Field>>{
                                   {"k", size_field(&RunConfig::oodgen, &OodGenConfig::k)},
                                   {"alpha", real_field(&RunConfig::oodgen, &OodGenConfig::alpha)},
                                   {"max_resample", size_field(&RunConfig::oodgen, &OodGenConfig::max_resample)},
                                   {"shared_weights", bool_field(&RunConfig::oodgen, &OodGenConfig::shared_weights)},
                               });

    out.emplace_back("eval", std::vector<std::pair<std::string, Field>>{
                                 {"scorer", {[](RunConfig& c, const std::string&, const std::string& v) { c.scorer = v; },
                                             [](const RunConfig& c) { return c.scorer; }}},
                             });
    return out;
  }();
  return s;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& [name, fields] : schema()) {
    if (name != section) continue;
    for (const auto& [k, f] : fields)
      if (k == key) return &f;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  oodgen.validate();
  parse_scorer_selection(scorer);
  if (seeds.empty()) throw ParameterError("cli", "seeds must list at least one seed");
  if (model.fusion == FusionMode::Weighted && model.fusion_hidden == 0) {
    throw ParameterError("fusion", "fusion_hidden (H_w) must be > 0");
  }
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ParameterError("fusion", "dropout must lie in [0, 1)");
  if (!(model.gamma > 0.0)) throw ParameterError("heads_losses", "gamma must be > 0");
  if (!(model.tau > 0.0)) throw ParameterError("heads_losses", "tau must be > 0");
  for (Modality m : kModalities) model.encoder.validate(synth.modalities[static_cast<std::size_t>(m)].shape.dim);
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError("cli", std::string("config syntax: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ParameterError("cli", "config key '" + section + "' must sit under a [section] header");
    }
    bool known_section = false;
    for (const auto& s : schema()) known_section = known_section || s.first == section;
    if (!known_section) throw ParameterError("cli", "unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (f == nullptr) throw ParameterError("cli", "unknown config key '" + section + "." + key + "'");
      f->set(cfg, section + "." + key, value.data());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cli", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const RunConfig& cfg) {
  std::string out;
  for (const auto& [section, fields] : schema()) {
    out += "[" + section + "]\n";
    for (const auto& [key, f] : fields) out += key + " = " + f.get(cfg) + "\n";
    out += "\n";
  }
  return out;
}

std::string_view ablation_key(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::FusionAdd: return "add";
    case Ablation::FusionConcat: return "concat";
    case Ablation::NoContrast: return "no_contrast";
    case Ablation::NoCosine: return "no_cosine";
    case Ablation::NoBinary: return "no_binary";
  }
  return "?";
}

std::string_view ablation_label(Ablation a) {
  switch (a) {
    case Ablation::Full: return "Full";
    case Ablation::FusionAdd: return "Fusion (Add)";
    case Ablation::FusionConcat: return "Fusion (Concat)";
    case Ablation::NoContrast: return "w / o Contrast";
    case Ablation::NoCosine: return "w / o Cosine";
    case Ablation::NoBinary: return "w / o Binary";
  }
  return "?";
}

Ablation parse_ablation(std::string_view key) {
  for (Ablation a : kAllAblations)
    if (ablation_key(a) == key) return a;
  throw ParameterError("cli", "unknown ablation '" + std::string(key) +
                                  "' (expected full, add, concat, no_contrast, no_cosine or no_binary)");
}

RunConfig with_ablation(RunConfig cfg, Ablation a) {
  switch (a) {
    case Ablation::Full: break;
    case Ablation::FusionAdd: cfg.model.fusion = FusionMode::Add; break;
    case Ablation::FusionConcat: cfg.model.fusion = FusionMode::Concat; break;
    case Ablation::NoContrast: cfg.train.no_contrast = true; break;
    case Ablation::NoCosine: cfg.model.head = HeadKind::Linear; break;
    case Ablation::NoBinary: cfg.train.no_binary = true; break;
  }
  return cfg;
}

}  // namespace mintood
