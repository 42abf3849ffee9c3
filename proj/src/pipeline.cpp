#include "mintood/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mintood/checkpoint.hpp"
#include "mintood/error.hpp"
#include "mintood/training.hpp"

namespace mintood {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cli", "cannot write " + path.string());
}

std::vector<int> argmax_rows(const Tensor2& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

ordered_json id_json(const IdMetrics& m) {
  ordered_json confusion = ordered_json::array();
  for (std::size_t g = 0; g < m.confusion.num_classes; ++g) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < m.confusion.num_classes; ++p) row.push_back(m.confusion.at(g, p));
    confusion.push_back(row);
  }
  return {{"acc", m.acc},
          {"f1", m.f1},
          {"precision", m.precision},
          {"recall", m.recall},
          {"weighted_f1", m.weighted_f1},
          {"weighted_precision", m.weighted_precision},
          {"per_class_accuracy", m.per_class_recall},
          {"per_class_precision", m.per_class_precision},
          {"per_class_f1", m.per_class_f1},
          {"confusion", confusion}};
}

ordered_json log_json(const EpochLog& l) {
  ordered_json j = {{"epoch", l.epoch},
                    {"stage", l.stage},
                    {"loss_coarse", l.coarse},
                    {"loss_multiclass", l.multiclass},
                    {"loss_contrastive", l.contrastive},
                    {"loss_total", l.total}};
  if (l.validated) {
    j["valid_acc"] = l.valid_acc;
    j["valid_wf1"] = l.valid_wf1;
  }
  return j;
}

}  // namespace

bool monotone_invariant(std::span<const double> scores, std::span<const int> is_id, const OodMetrics& reference) {
  Vector shifted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) shifted[i] = 2.0 * scores[i] + 7.0;
  const OodMetrics t = ood_metrics(shifted, is_id);
  return t.auroc == reference.auroc && t.aupr_in == reference.aupr_in && t.aupr_out == reference.aupr_out &&
         t.fpr95 == reference.fpr95 && t.der == reference.der;
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus,
                    const std::vector<ScorerKind>& scorers) {
  const auto train_idx = corpus.indices(Split::Train);
  const auto test_idx = corpus.indices(Split::Test);
  if (test_idx.empty()) throw InsufficientDataError("cli", "test split is empty");

  const Features train = extract_features(params, cfg, corpus, train_idx);
  std::vector<int> train_labels;
  for (std::size_t i : train_idx) train_labels.push_back(corpus.records[i].label);
  const ScorerState state = fit_scorers(train.fused, train_labels, train.logits, cfg.num_classes());

  const Features test = extract_features(params, cfg, corpus, test_idx);
  EvalReport report;
  report.preds = argmax_rows(test.logits);
  std::vector<int> id_preds;
  std::vector<int> id_golds;
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    const auto& rec = corpus.records[test_idx[i]];
    report.sample_ids.push_back(rec.id);
    report.is_id.push_back(rec.is_ood() ? 0 : 1);
    report.labels.push_back(rec.label);
    if (!rec.is_ood()) {
      id_preds.push_back(report.preds[i]);
      id_golds.push_back(rec.label);
    }
  }
  if (id_golds.empty()) throw InsufficientDataError("cli", "test split has no ID samples");
  report.id = id_metrics(id_preds, id_golds, cfg.num_classes());

  for (ScorerKind kind : scorers) {
    ScorerReport s;
    s.kind = kind;
    s.raw = score_rows(kind, state, test.fused, test.logits);
    s.normalized = normalize_scores(s.raw);
    s.ood = ood_metrics(s.raw, report.is_id);
    s.monotone_invariant = monotone_invariant(s.raw, report.is_id, s.ood);
    report.scorers.push_back(std::move(s));
  }
  return report;
}

ordered_json report_json(const EvalReport& report) {
  ordered_json scorers = ordered_json::array();
  for (const auto& s : report.scorers) {
    scorers.push_back({{"scorer", std::string(scorer_name(s.kind))},
                       {"fpr95", s.ood.fpr95},
                       {"der", s.ood.der},
                       {"aupr_in", s.ood.aupr_in},
                       {"aupr_out", s.ood.aupr_out},
                       {"auroc", s.ood.auroc},
                       {"coarse_tpr", s.ood.coarse_tpr},
                       {"monotone_invariant", s.monotone_invariant}});
  }
  return {{"test_samples", report.sample_ids.size()},
          {"id", id_json(report.id)},
          {"ood", scorers}};
}

std::string report_csv(const EvalReport& report) {
  std::string out = "scorer,acc,f1,precision,recall,wf1,wp,fpr95,der,aupr_in,aupr_out,auroc,monotone_invariant\n";
  const IdMetrics& m = report.id;
  for (const auto& s : report.scorers) {
    out += std::string(scorer_name(s.kind)) + "," + num(m.acc) + "," + num(m.f1) + "," + num(m.precision) + "," +
           num(m.recall) + "," + num(m.weighted_f1) + "," + num(m.weighted_precision) + "," + num(s.ood.fpr95) +
           "," + num(s.ood.der) + "," + num(s.ood.aupr_in) + "," + num(s.ood.aupr_out) + "," + num(s.ood.auroc) +
           "," + (s.monotone_invariant ? "true" : "false") + "\n";
  }
  return out;
}

void write_score_dump(const EvalReport& report, const fs::path& path) {
  std::string out;
  for (const auto& s : report.scorers) {
    for (std::size_t i = 0; i < report.sample_ids.size(); ++i) {
      ordered_json j = {{"id", report.sample_ids[i]},
                        {"scorer", std::string(scorer_name(s.kind))},
                        {"is_id", report.is_id[i] != 0},
                        {"label", report.labels[i]},
                        {"raw", s.raw[i]},
                        {"normalized", s.normalized[i]}};
      if (report.labels[i] == kOodLabel) j["label"] = std::string(kOodToken);
      out += j.dump() + "\n";
    }
  }
  write_text(path, out);
}

RunResult summarize(const std::string& variant, std::uint64_t seed, const EvalReport& report,
                    std::size_t best_epoch) {
  RunResult r;
  r.variant = variant;
  r.seed = seed;
  r.acc = report.id.acc;
  r.f1 = report.id.f1;
  r.precision = report.id.precision;
  r.recall = report.id.recall;
  r.weighted_f1 = report.id.weighted_f1;
  r.weighted_precision = report.id.weighted_precision;
  const auto it = std::find_if(report.scorers.begin(), report.scorers.end(),
                               [](const ScorerReport& s) { return s.kind == ScorerKind::Mahalanobis; });
  if (it != report.scorers.end()) {
    r.fpr95 = it->ood.fpr95;
    r.der = it->ood.der;
    r.aupr_in = it->ood.aupr_in;
    r.aupr_out = it->ood.aupr_out;
    r.auroc = it->ood.auroc;
  }
  r.best_epoch = best_epoch;
  return r;
}

std::vector<double> metric_values(const RunResult& r) {
  return {r.acc, r.f1, r.precision, r.recall, r.weighted_f1, r.weighted_precision,
          r.fpr95, r.der, r.aupr_in, r.aupr_out, r.auroc};
}

std::vector<Aggregate> aggregate(const std::vector<RunResult>& rows) {
  std::vector<Aggregate> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.variant == r.variant; });
    if (it == out.end()) {
      out.push_back({r.variant, 0, {}, {}});
      it = std::prev(out.end());
    }
    ++it->runs;
  }
  for (auto& a : out) {
    const std::size_t n_metrics = std::size(kMetricNames);
    a.mean.assign(n_metrics, 0.0);
    a.stddev.assign(n_metrics, 0.0);
    for (const auto& r : rows) {
      if (r.variant != a.variant) continue;
      const auto v = metric_values(r);
      for (std::size_t k = 0; k < n_metrics; ++k) a.mean[k] += v[k];
    }
    for (double& m : a.mean) m /= static_cast<double>(a.runs);
    if (a.runs < 2) continue;
    for (const auto& r : rows) {
      if (r.variant != a.variant) continue;
      const auto v = metric_values(r);
      for (std::size_t k = 0; k < n_metrics; ++k) a.stddev[k] += (v[k] - a.mean[k]) * (v[k] - a.mean[k]);
    }
    for (double& s : a.stddev) s = std::sqrt(s / static_cast<double>(a.runs - 1));
  }
  return out;
}

std::string results_csv(const std::vector<RunResult>& rows) {
  std::string out = "variant,seed";
  for (const char* name : kMetricNames) out += std::string(",") + name;
  out += ",best_epoch\n";
  for (const auto& r : rows) {
    out += "\"" + r.variant + "\"," + std::to_string(r.seed);
    for (double v : metric_values(r)) out += "," + num(v);
    out += "," + std::to_string(r.best_epoch) + "\n";
  }
  return out;
}

std::string aggregate_csv(const std::vector<Aggregate>& rows) {
  std::string out = "variant,runs";
  for (const char* name : kMetricNames) out += std::string(",") + name + "_mean," + name + "_std";
  out += "\n";
  for (const auto& a : rows) {
    out += "\"" + a.variant + "\"," + std::to_string(a.runs);
    for (std::size_t k = 0; k < a.mean.size(); ++k) out += "," + num(a.mean[k]) + "," + num(a.stddev[k]);
    out += "\n";
  }
  return out;
}

std::vector<RunResult> run_seeds(const RunConfig& cfg, const Corpus& corpus, const std::string& variant,
                                 const fs::path& out_dir) {
  cfg.validate();
  ModelConfig model = cfg.model;
  model.schema = corpus.schema;
  std::vector<RunResult> rows;
  for (std::uint64_t seed : cfg.seeds) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    std::string log;
    const TrainResult trained =
        train(corpus, model, tc, cfg.oodgen, [&](const EpochLog& l) { log += log_json(l).dump() + "\n"; });
    const EvalReport report = evaluate(trained.params, model, corpus, {ScorerKind::Mahalanobis});
    rows.push_back(summarize(variant, seed, report, trained.best_epoch));
    if (!out_dir.empty()) {
      const fs::path dir = out_dir / ("seed-" + std::to_string(seed));
      save_checkpoint(trained.params, model, dir);
      write_text(dir / "train_log.jsonl", log);
      write_text(dir / "report.json", report_json(report).dump(2) + "\n");
    }
  }
  return rows;
}

std::vector<OrderingCheck> ablation_orderings(const std::vector<Aggregate>& agg) {
  const std::size_t auroc = std::size(kMetricNames) - 1;
  auto mean_of = [&](Ablation a) -> const Aggregate* {
    for (const auto& x : agg)
      if (x.variant == ablation_label(a)) return &x;
    return nullptr;
  };
  std::vector<OrderingCheck> out;
  auto check = [&](Ablation left, Ablation right, const std::string& what) {
    const Aggregate* l = mean_of(left);
    const Aggregate* r = mean_of(right);
    if (l == nullptr || r == nullptr) return;
    out.push_back({what, l->mean[auroc], r->mean[auroc], l->mean[auroc] >= r->mean[auroc]});
  };
  check(Ablation::Full, Ablation::FusionAdd, "weighted fusion >= add fusion (mean AUROC)");
  check(Ablation::Full, Ablation::FusionConcat, "weighted fusion >= concat fusion (mean AUROC)");
  check(Ablation::Full, Ablation::NoBinary, "full >= w / o Binary (mean AUROC)");
  return out;
}

}  // namespace mintood
