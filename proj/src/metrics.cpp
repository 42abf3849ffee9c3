#include "mintood/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "mintood/error.hpp"

namespace mintood {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void check_inputs(std::span<const double> scores, std::span<const int> is_id) {
  if (scores.size() != is_id.size()) {
    throw ParameterError("metrics", "scores and flags differ in length (" + std::to_string(scores.size()) +
                                        " vs " + std::to_string(is_id.size()) + ")");
  }
}

struct Counts {
  std::size_t id = 0;
  std::size_t ood = 0;
};

Counts count_flags(std::span<const int> is_id) {
  Counts c;
  for (int f : is_id) (f != 0 ? c.id : c.ood)++;
  return c;
}

// Groups of tied scores in sweep order. Each entry carries the threshold and
// the cumulative ID / OOD counts at or beyond it.
struct SweepStep {
  double threshold;
  std::size_t id_above;
  std::size_t ood_above;
};

std::vector<SweepStep> sweep(std::span<const double> scores, std::span<const int> is_id, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  std::vector<SweepStep> steps;
  std::size_t id = 0;
  std::size_t ood = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (is_id[order[i]] != 0 ? id : ood)++;
    const bool last_of_group = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (last_of_group) steps.push_back({scores[order[i]], id, ood});
  }
  return steps;
}

}  // namespace

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

IdMetrics id_metrics(std::span<const int> preds, std::span<const int> golds, std::size_t num_classes) {
  if (preds.size() != golds.size()) {
    throw ParameterError("metrics", "preds and golds differ in length (" + std::to_string(preds.size()) +
                                        " vs " + std::to_string(golds.size()) + ")");
  }
  if (num_classes == 0) throw ParameterError("metrics", "num_classes must be > 0");
  IdMetrics m;
  m.confusion.num_classes = num_classes;
  m.confusion.counts.assign(num_classes * num_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int g = golds[i];
    if (p < 0 || g < 0 || p >= static_cast<int>(num_classes) || g >= static_cast<int>(num_classes)) {
      throw ParameterError("metrics", "label outside [0, K) at position " + std::to_string(i));
    }
    m.confusion.counts[static_cast<std::size_t>(g) * num_classes + static_cast<std::size_t>(p)]++;
  }

  const double total = static_cast<double>(preds.size());
  std::size_t correct = 0;
  m.per_class_precision.assign(num_classes, 0.0);
  m.per_class_recall.assign(num_classes, 0.0);
  m.per_class_f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t predicted = 0;
    std::size_t support = 0;
    for (std::size_t o = 0; o < num_classes; ++o) {
      predicted += m.confusion.at(o, c);
      support += m.confusion.at(c, o);
    }
    const double tp = static_cast<double>(m.confusion.at(c, c));
    correct += m.confusion.at(c, c);
    const double p = ratio(tp, static_cast<double>(predicted));
    const double r = ratio(tp, static_cast<double>(support));
    const double f = ratio(2.0 * p * r, p + r);
    m.per_class_precision[c] = p;
    m.per_class_recall[c] = r;
    m.per_class_f1[c] = f;
    m.precision += p / static_cast<double>(num_classes);
    m.recall += r / static_cast<double>(num_classes);
    const double weight = ratio(static_cast<double>(support), total);
    m.weighted_precision += weight * p;
    m.weighted_f1 += weight * f;
  }
  m.acc = ratio(static_cast<double>(correct), total);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

RocResult roc_auroc(std::span<const double> scores, std::span<const int> is_id) {
  check_inputs(scores, is_id);
  const Counts c = count_flags(is_id);
  if (c.id == 0 || c.ood == 0) throw UndefinedMetricError("metrics", "AUROC needs both ID and OOD samples");
  RocResult result;
  result.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  // Trapezoids in integer units of 1 / (2 * n_id * n_ood): the area is the
  // exact Mann-Whitney count, divided once at the end.
  std::uint64_t units = 0;
  std::size_t prev_id = 0;
  std::size_t prev_ood = 0;
  for (const auto& step : sweep(scores, is_id, true)) {
    units += static_cast<std::uint64_t>(step.ood_above - prev_ood) * (step.id_above + prev_id);
    prev_id = step.id_above;
    prev_ood = step.ood_above;
    result.curve.push_back({step.threshold, static_cast<double>(step.ood_above) / static_cast<double>(c.ood),
                            static_cast<double>(step.id_above) / static_cast<double>(c.id)});
  }
  result.auroc = static_cast<double>(units) / (2.0 * static_cast<double>(c.id) * static_cast<double>(c.ood));
  return result;
}

double aupr(std::span<const double> scores, std::span<const int> is_id, PositiveClass positive) {
  check_inputs(scores, is_id);
  const Counts c = count_flags(is_id);
  const std::size_t positives = positive == PositiveClass::Id ? c.id : c.ood;
  if (positives == 0) throw UndefinedMetricError("metrics", "AUPR needs at least one positive sample");
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& step : sweep(scores, is_id, positive == PositiveClass::Id)) {
    const std::size_t tp = positive == PositiveClass::Id ? step.id_above : step.ood_above;
    const std::size_t fp = positive == PositiveClass::Id ? step.ood_above : step.id_above;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

double detection_error(double tpr, double fpr) { return 0.5 * (1.0 - tpr) + 0.5 * fpr; }

Fpr95Result fpr95_der(std::span<const double> scores, std::span<const int> is_id) {
  check_inputs(scores, is_id);
  const Counts c = count_flags(is_id);
  if (c.id == 0 || c.ood == 0) throw UndefinedMetricError("metrics", "FPR95 needs both ID and OOD samples");
  Fpr95Result result;
  result.coarse_tpr = c.id < 20;
  // TPR is non-decreasing along the descending sweep, so the first step that
  // reaches 0.95 is the largest qualifying threshold and has the least FPR.
  for (const auto& step : sweep(scores, is_id, true)) {
    // TPR >= 0.95 checked in integers: 20 * TP >= 19 * n_id.
    if (20 * step.id_above >= 19 * c.id) {
      result.threshold = step.threshold;
      result.tpr = static_cast<double>(step.id_above) / static_cast<double>(c.id);
      result.fpr95 = static_cast<double>(step.ood_above) / static_cast<double>(c.ood);
      result.der = detection_error(result.tpr, result.fpr95);
      break;
    }
  }
  return result;
}

OodMetrics ood_metrics(std::span<const double> scores, std::span<const int> is_id) {
  OodMetrics m;
  const Fpr95Result f = fpr95_der(scores, is_id);
  m.fpr95 = f.fpr95;
  m.der = f.der;
  m.coarse_tpr = f.coarse_tpr;
  m.auroc = roc_auroc(scores, is_id).auroc;
  m.aupr_in = aupr(scores, is_id, PositiveClass::Id);
  m.aupr_out = aupr(scores, is_id, PositiveClass::Ood);
  return m;
}

}  // namespace mintood
