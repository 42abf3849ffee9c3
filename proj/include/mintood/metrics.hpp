#pragma once

#include <span>
#include <vector>

#include "mintood/tensor.hpp"

namespace mintood {

/// K x K counts; rows are ground truth, columns predictions.
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * num_classes + pred]; }
  std::size_t total() const;
};

struct IdMetrics {
  double acc = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // 2PR/(P+R) of the macro values
  double weighted_precision = 0.0;
  double weighted_f1 = 0.0;
  Vector per_class_precision;
  Vector per_class_recall;  // also the per-class accuracy
  Vector per_class_f1;
  ConfusionMatrix confusion;
};

/// ID classification metrics. Per-class ratios with a zero denominator count
/// as 0; weighted variants use class support T_c / T as weights.
IdMetrics id_metrics(std::span<const int> preds, std::span<const int> golds, std::size_t num_classes);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;  // FPR (ROC) or recall (PR)
  double y = 0.0;  // TPR (ROC) or precision (PR)
};

struct RocResult {
  std::vector<CurvePoint> curve;  // starts at (0, 0), ends at (1, 1)
  double auroc = 0.0;
};

/// Scores follow "larger means more ID". Thresholds sweep the unique score
/// values in descending order with ties grouped; the area is trapezoidal.
RocResult roc_auroc(std::span<const double> scores, std::span<const int> is_id);

enum class PositiveClass { Id, Ood };

/// Step-wise area sum((R_i - R_{i-1}) * P_i). OOD-positive sweeps run over
/// ascending scores.
double aupr(std::span<const double> scores, std::span<const int> is_id, PositiveClass positive);

struct Fpr95Result {
  double fpr95 = 0.0;
  double der = 0.0;
  double threshold = 0.0;
  double tpr = 0.0;
  bool coarse_tpr = false;  // fewer than 20 ID samples: TPR moves in steps > 5%
};

/// 0.5 * (1 - TPR) + 0.5 * FPR.
double detection_error(double tpr, double fpr);

/// FPR and DER at the largest threshold whose TPR reaches 0.95.
Fpr95Result fpr95_der(std::span<const double> scores, std::span<const int> is_id);

struct OodMetrics {
  double fpr95 = 0.0;
  double der = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;
  double auroc = 0.0;
  bool coarse_tpr = false;
};

OodMetrics ood_metrics(std::span<const double> scores, std::span<const int> is_id);

}  // namespace mintood
