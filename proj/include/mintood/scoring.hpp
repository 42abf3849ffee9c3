#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "mintood/tensor.hpp"

namespace mintood {

// All scores follow "larger means more ID-like".

struct ClassStats {
  std::vector<Vector> means;        // mu_k
  std::vector<Tensor2> covariances; // unbiased, unregularized
  std::vector<Tensor2> precisions;  // (Sigma_k + eps_k I)^{-1}
  std::vector<std::size_t> counts;
  Vector ridge;                     // eps_k

  std::size_t num_classes() const noexcept { return means.size(); }
};

/// Per-class means and covariances of the training features. Throws
/// InsufficientDataError naming the class when it has fewer than 2 rows.
ClassStats fit_class_stats(const Tensor2& features, std::span<const int> labels, std::size_t num_classes,
                           double ridge_relative = 1e-6, double ridge_floor = 1e-12);

/// -min_k (z - mu_k)^T P_k (z - mu_k).
double score_mahalanobis(std::span<const double> z, const ClassStats& stats);
Vector score_mahalanobis(const Tensor2& z, const ClassStats& stats);

double score_energy(std::span<const double> logits);
double score_msp(std::span<const double> logits);
double score_maxlogit(std::span<const double> logits);

/// Distance to the principal subspace of the L2-normalized, centered
/// training features. The subspace keeps the top-K eigenvectors.
struct ResidualScorer {
  Vector mean;
  Tensor2 basis;            // D x K
  bool degenerate = false;  // K >= D: the residual is identically 0

  static ResidualScorer fit(const Tensor2& train_features, std::size_t num_classes);

  /// ||(I - B B^T)(z/|z| - mean)||, a non-negative magnitude.
  double residual(std::span<const double> z) const;
  double score(std::span<const double> z) const { return -residual(z); }
};

/// Residual turned into a virtual logit appended to the real ones.
struct VimScorer {
  ResidualScorer residual;
  double alpha = 0.0;

  /// alpha = mean(max train logit) / mean(train residual). Throws
  /// NumericalError when the mean residual is 0.
  static VimScorer fit(const Tensor2& train_features, const Tensor2& train_logits, ResidualScorer residual);

  /// -softmax([logits; alpha * residual(z)]) at the virtual position.
  double score(std::span<const double> z, std::span<const double> logits) const;
};

/// -softmax([logits; virtual_logit]) at the virtual position.
double vim_from_virtual_logit(std::span<const double> logits, double virtual_logit);

/// Min-max scaling to [0, 1]; constant input maps to 0.5.
Vector normalize_scores(std::span<const double> scores);

enum class ScorerKind { Mahalanobis, Energy, Msp, MaxLogit, Residual, Vim };
inline constexpr std::array<ScorerKind, 6> kAllScorers = {ScorerKind::Mahalanobis, ScorerKind::Energy,
                                                          ScorerKind::Msp,         ScorerKind::MaxLogit,
                                                          ScorerKind::Residual,    ScorerKind::Vim};
std::string_view scorer_name(ScorerKind kind);
ScorerKind parse_scorer(std::string_view name);
/// "all" expands to every scorer; otherwise a single one.
std::vector<ScorerKind> parse_scorer_selection(std::string_view name);

/// Everything fitted on training features that any scorer needs.
struct ScorerState {
  ClassStats stats;
  ResidualScorer residual;
  VimScorer vim;
  bool vim_ready = false;  // false when the residual degenerates
};

ScorerState fit_scorers(const Tensor2& train_features, std::span<const int> train_labels,
                        const Tensor2& train_logits, std::size_t num_classes);

/// Scores of one kind for every row.
Vector score_rows(ScorerKind kind, const ScorerState& state, const Tensor2& features, const Tensor2& logits);

}  // namespace mintood
