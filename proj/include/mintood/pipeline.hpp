#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mintood/config.hpp"
#include "mintood/metrics.hpp"
#include "mintood/scoring.hpp"

namespace mintood {

struct ScorerReport {
  ScorerKind kind = ScorerKind::Mahalanobis;
  OodMetrics ood;
  Vector raw;         // per test sample, larger means more ID
  Vector normalized;  // min-max scaled raw
  bool monotone_invariant = false;  // metrics of 2x+7 match bit for bit
};

struct EvalReport {
  IdMetrics id;
  std::vector<ScorerReport> scorers;
  std::vector<std::string> sample_ids;  // test split order
  std::vector<int> is_id;
  std::vector<int> labels;  // kOodLabel for OOD
  std::vector<int> preds;   // argmax class for every test sample
};

/// Scores the test split with the fitted scorers. Class statistics and the
/// residual subspace come from the training split features.
EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus,
                    const std::vector<ScorerKind>& scorers);

/// Ranking metrics of 2x+7 equal those of x exactly.
bool monotone_invariant(std::span<const double> scores, std::span<const int> is_id, const OodMetrics& reference);

nlohmann::ordered_json report_json(const EvalReport& report);

/// One header line plus one row per scorer.
std::string report_csv(const EvalReport& report);

/// Line-delimited records: id, scorer, is_id, label, raw, normalized.
void write_score_dump(const EvalReport& report, const std::filesystem::path& path);

/// The summary row kept per trained model.
struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  double acc = 0.0, f1 = 0.0, precision = 0.0, recall = 0.0, weighted_f1 = 0.0, weighted_precision = 0.0;
  double fpr95 = 0.0, der = 0.0, aupr_in = 0.0, aupr_out = 0.0, auroc = 0.0;
  std::size_t best_epoch = 0;
};

RunResult summarize(const std::string& variant, std::uint64_t seed, const EvalReport& report,
                    std::size_t best_epoch);

inline constexpr const char* kMetricNames[] = {"acc",   "f1",  "precision", "recall",   "wf1",  "wp",
                                               "fpr95", "der", "aupr_in",   "aupr_out", "auroc"};
std::vector<double> metric_values(const RunResult& r);

struct Aggregate {
  std::string variant;
  std::size_t runs = 0;
  std::vector<double> mean;  // in kMetricNames order
  std::vector<double> stddev;  // sample standard deviation (n - 1); 0 for one run
};

/// Groups rows by variant in first-seen order.
std::vector<Aggregate> aggregate(const std::vector<RunResult>& rows);

std::string results_csv(const std::vector<RunResult>& rows);
std::string aggregate_csv(const std::vector<Aggregate>& rows);

/// Trains one model per seed and evaluates it with the Mahalanobis scorer.
/// Checkpoints, logs and reports land under out_dir/seed-<s>/ when
/// out_dir is non-empty.
std::vector<RunResult> run_seeds(const RunConfig& cfg, const Corpus& corpus, const std::string& variant,
                                 const std::filesystem::path& out_dir);

struct OrderingCheck {
  std::string description;
  double left = 0.0;
  double right = 0.0;
  bool holds = false;
};

/// Mean-AUROC orderings expected of the ablation table: weighted fusion at
/// least add and concat fusion, and the full model at least w / o Binary.
std::vector<OrderingCheck> ablation_orderings(const std::vector<Aggregate>& agg);

}  // namespace mintood
