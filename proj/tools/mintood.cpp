// mintood: synth | train | eval | ablate | report

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mintood/checkpoint.hpp"
#include "mintood/config.hpp"
#include "mintood/error.hpp"
#include "mintood/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mintood;

namespace {

struct Options {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out = "out";
  std::string scorer;
  std::string ablation = "full";
  std::string corpus;
  std::string checkpoint;
  std::string input;
  std::size_t bins = 20;
};

RunConfig load_run_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.scorer.empty()) cfg.scorer = o.scorer;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cli", "cannot write " + path.string());
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cli", "cannot create " + out + ": " + ec.message());
  return out;
}

Corpus open_corpus(const std::string& path) {
  if (path.empty()) throw ParameterError("cli", "--corpus is required");
  const fs::path p = fs::is_directory(path) ? fs::path(path) / kManifestName : fs::path(path);
  return load_corpus(p);
}

std::string percent(double mean, double sd) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%6.2f +- %5.2f", 100.0 * mean, 100.0 * sd);
  return buf;
}

void print_aggregate(const std::vector<Aggregate>& agg) {
  std::printf("%-18s %-16s %-16s %-16s %-16s %-16s\n", "variant", "ACC", "WF1", "FPR95", "AUPR-Out", "AUROC");
  for (const auto& a : agg) {
    std::printf("%-18s %-16s %-16s %-16s %-16s %-16s\n", a.variant.c_str(), percent(a.mean[0], a.stddev[0]).c_str(),
                percent(a.mean[4], a.stddev[4]).c_str(), percent(a.mean[6], a.stddev[6]).c_str(),
                percent(a.mean[9], a.stddev[9]).c_str(), percent(a.mean[10], a.stddev[10]).c_str());
  }
}

int cmd_synth(const Options& o) {
  RunConfig cfg = load_run_config(o);
  if (!o.seeds.empty()) cfg.synth_seed = o.seeds.front();
  Rng rng(cfg.synth_seed);
  const Corpus corpus = synth_corpus(cfg.synth, rng);
  const fs::path manifest = save_corpus(corpus, prepare_out(o.out));
  load_corpus(manifest);
  std::printf("wrote %zu records to %s\n", corpus.records.size(), manifest.string().c_str());
  return 0;
}

int cmd_train(const Options& o) {
  const Ablation ablation = parse_ablation(o.ablation);
  const RunConfig cfg = with_ablation(load_run_config(o), ablation);
  const Corpus corpus = open_corpus(o.corpus);
  const fs::path out = prepare_out(o.out);
  write_text(out / "config.ini", to_ini(cfg));
  const auto rows = run_seeds(cfg, corpus, std::string(ablation_label(ablation)), out);
  const auto agg = aggregate(rows);
  write_text(out / "results.csv", results_csv(rows));
  write_text(out / "summary.csv", aggregate_csv(agg));
  print_aggregate(agg);
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw ParameterError("cli", "--checkpoint is required");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const Corpus corpus = open_corpus(o.corpus);
  if (ck.config.schema != corpus.schema) throw ParameterError("cli", "checkpoint schema does not match the corpus");
  const auto scorers = parse_scorer_selection(o.scorer.empty() ? "all" : o.scorer);
  const EvalReport report = evaluate(ck.params, ck.config, corpus, scorers);
  const fs::path out = prepare_out(o.out);
  write_text(out / "report.json", report_json(report).dump(2) + "\n");
  write_text(out / "report.csv", report_csv(report));
  write_score_dump(report, out / "scores.jsonl");
  std::printf("ACC %.4f  F1 %.4f  WF1 %.4f\n", report.id.acc, report.id.f1, report.id.weighted_f1);
  std::printf("%-12s %8s %8s %8s %8s %8s  %s\n", "scorer", "FPR95", "DER", "AUPR-In", "AUPR-Out", "AUROC",
              "2x+7 invariant");
  for (const auto& s : report.scorers) {
    std::printf("%-12s %8.4f %8.4f %8.4f %8.4f %8.4f  %s\n", std::string(scorer_name(s.kind)).c_str(), s.ood.fpr95,
                s.ood.der, s.ood.aupr_in, s.ood.aupr_out, s.ood.auroc, s.monotone_invariant ? "yes" : "NO");
  }
  return 0;
}

int cmd_ablate(const Options& o) {
  const RunConfig base = load_run_config(o);
  const Corpus corpus = open_corpus(o.corpus);
  const fs::path out = prepare_out(o.out);
  write_text(out / "config.ini", to_ini(base));
  std::vector<RunResult> rows;
  for (Ablation a : kAllAblations) {
    const auto part = run_seeds(with_ablation(base, a), corpus, std::string(ablation_label(a)),
                                out / std::string(ablation_key(a)));
    rows.insert(rows.end(), part.begin(), part.end());
    std::fprintf(stderr, "%s done\n", std::string(ablation_label(a)).c_str());
  }
  const auto agg = aggregate(rows);
  write_text(out / "ablation_runs.csv", results_csv(rows));
  write_text(out / "ablation_summary.csv", aggregate_csv(agg));
  print_aggregate(agg);
  std::string orderings = "check,left,right,holds\n";
  for (const auto& c : ablation_orderings(agg)) {
    std::printf("%s %s (%.4f vs %.4f)\n", c.holds ? "[ok]     " : "[FLAGGED]", c.description.c_str(), c.left,
                c.right);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", c.left, c.right);
    orderings += "\"" + c.description + "\"," + buf + "," + (c.holds ? "true" : "false") + "\n";
  }
  write_text(out / "ablation_orderings.csv", orderings);
  return 0;
}

// Plot data from an eval directory: normalized-score histograms per scorer
// (ID vs OOD) and the confusion matrix.
int cmd_report(const Options& o) {
  if (o.input.empty()) throw ParameterError("cli", "--in (an eval output directory) is required");
  if (o.bins == 0) throw ParameterError("cli", "--bins must be > 0");
  const fs::path in(o.input);
  std::ifstream scores(in / "scores.jsonl");
  if (!scores) throw IoError("cli", "missing " + (in / "scores.jsonl").string());
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> hist;
  std::vector<std::string> order;
  std::string line;
  while (std::getline(scores, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::string scorer = j.at("scorer");
    auto [it, fresh] = hist.try_emplace(scorer, std::vector<std::size_t>(o.bins), std::vector<std::size_t>(o.bins));
    if (fresh) order.push_back(scorer);
    const double v = j.at("normalized").get<double>();
    const auto bin = std::min(o.bins - 1, static_cast<std::size_t>(std::floor(v * static_cast<double>(o.bins))));
    (j.at("is_id").get<bool>() ? it->second.first : it->second.second)[bin]++;
  }
  const fs::path out = prepare_out(o.out);
  std::string csv = "scorer,bin_low,bin_high,id_count,ood_count\n";
  for (const auto& name : order) {
    const auto& [id, ood] = hist.at(name);
    for (std::size_t b = 0; b < o.bins; ++b) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s,%.6g,%.6g,%zu,%zu\n", name.c_str(), static_cast<double>(b) / o.bins,
                    static_cast<double>(b + 1) / o.bins, id[b], ood[b]);
      csv += buf;
    }
  }
  write_text(out / "score_histogram.csv", csv);

  std::ifstream rj(in / "report.json");
  if (!rj) throw IoError("cli", "missing " + (in / "report.json").string());
  const auto report = nlohmann::json::parse(rj);
  std::string confusion = "truth,prediction,count\n";
  const auto& rows = report.at("id").at("confusion");
  for (std::size_t g = 0; g < rows.size(); ++g)
    for (std::size_t p = 0; p < rows[g].size(); ++p)
      confusion += std::to_string(g) + "," + std::to_string(p) + "," + rows[g][p].dump() + "\n";
  write_text(out / "confusion.csv", confusion);
  std::printf("wrote %s and %s\n", (out / "score_histogram.csv").string().c_str(),
              (out / "confusion.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal intent classification with OOD detection"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* train = app.add_subcommand("train", "train one model per seed");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint with one or all scorers");
  auto* ablate = app.add_subcommand("ablate", "train and compare the six ablation variants");
  auto* report = app.add_subcommand("report", "emit plot data from an eval directory");

  for (auto* sc : {synth, train, ablate}) {
    sc->add_option("--config", o.config, "config file ([synth] [model] [train] [oodgen] [eval])");
    sc->add_option("--seed", o.seeds, "seed(s); overrides the config")->delimiter(',');
  }
  for (auto* sc : {synth, train, eval, ablate, report}) sc->add_option("--out", o.out, "output directory");
  for (auto* sc : {train, eval, ablate}) sc->add_option("--corpus", o.corpus, "corpus directory or manifest");
  train->add_option("--ablation", o.ablation, "full, add, concat, no_contrast, no_cosine or no_binary");
  for (auto* sc : {train, eval, ablate}) sc->add_option("--scorer", o.scorer, "scorer name or all");
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint directory")->required();
  report->add_option("--in", o.input, "eval output directory")->required();
  report->add_option("--bins", o.bins, "histogram bins");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return cmd_synth(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*ablate) return cmd_ablate(o);
    if (*report) return cmd_report(o);
  } catch (const mintood::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
