#include "mintood/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mintood/error.hpp"
#include "mintood/kernels.hpp"
#include "mintood/linalg.hpp"
#include "mintood/ops.hpp"

namespace mintood {
namespace {

Tensor2 gather_rows(const Tensor2& m, std::span<const std::size_t> rows) {
  Tensor2 out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

ClassStats fit_class_stats(const Tensor2& features, std::span<const int> labels, std::size_t num_classes,
                           double ridge_relative, double ridge_floor) {
  if (features.rows() != labels.size()) {
    throw ParameterError("scoring", "features have " + std::to_string(features.rows()) + " rows but " +
                                        std::to_string(labels.size()) + " labels");
  }
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(num_classes)) {
      throw ParameterError("scoring", "training label " + std::to_string(labels[i]) + " outside [0, K)");
    }
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  ClassStats stats;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (members[k].size() < 2) {
      throw InsufficientDataError("scoring", "class " + std::to_string(k) + " has " +
                                                 std::to_string(members[k].size()) +
                                                 " training features; need at least 2");
    }
    const Tensor2 rows = gather_rows(features, members[k]);
    Vector mu(rows.cols(), 0.0);
    for (std::size_t r = 0; r < rows.rows(); ++r)
      for (std::size_t c = 0; c < rows.cols(); ++c) mu[c] += rows(r, c);
    for (double& v : mu) v /= static_cast<double>(rows.rows());
    Tensor2 cov = covariance(rows);
    const double eps = covariance_ridge(cov, ridge_relative, ridge_floor);
    stats.precisions.push_back(regularized_inverse(cov, eps));
    stats.means.push_back(std::move(mu));
    stats.covariances.push_back(std::move(cov));
    stats.counts.push_back(rows.rows());
    stats.ridge.push_back(eps);
  }
  return stats;
}

double score_mahalanobis(std::span<const double> z, const ClassStats& stats) {
  const Tensor2 row = Tensor2::row_vector(z);
  return score_mahalanobis(row, stats).front();
}

Vector score_mahalanobis(const Tensor2& z, const ClassStats& stats) {
  if (stats.num_classes() == 0) throw ContractError("scoring", "class statistics are not fitted");
  Vector best(z.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < stats.num_classes(); ++k) {
    const Vector d = kernels::parallel::quadratic_forms(z, stats.means[k], stats.precisions[k]);
    for (std::size_t i = 0; i < d.size(); ++i) best[i] = std::min(best[i], d[i]);
  }
  for (double& v : best) v = -v;
  return best;
}

double score_energy(std::span<const double> logits) { return logsumexp(logits); }

double score_msp(std::span<const double> logits) {
  const Vector p = softmax(logits);
  return *std::max_element(p.begin(), p.end());
}

double score_maxlogit(std::span<const double> logits) {
  if (logits.empty()) throw ParameterError("scoring", "empty logits");
  return *std::max_element(logits.begin(), logits.end());
}

ResidualScorer ResidualScorer::fit(const Tensor2& train_features, std::size_t num_classes) {
  const std::size_t n = train_features.rows();
  const std::size_t dim = train_features.cols();
  if (n < 2) throw InsufficientDataError("scoring", "residual fit needs at least 2 training features");
  if (num_classes == 0) throw ParameterError("scoring", "residual subspace dimension K must be > 0");
  Tensor2 unit(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector u = l2_normalize(train_features.row(i));
    std::copy(u.begin(), u.end(), unit.row(i).begin());
  }
  ResidualScorer s;
  s.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c) s.mean[c] += unit(i, c);
  for (double& v : s.mean) v /= static_cast<double>(n);
  if (num_classes >= dim) {
    s.degenerate = true;
    s.basis = Tensor2::identity(dim);
    return s;
  }
  // Centering does not change the covariance, so the eigenbasis comes from
  // the normalized rows directly.
  s.basis = principal_subspace(covariance(unit), num_classes);
  return s;
}

double ResidualScorer::residual(std::span<const double> z) const {
  if (z.size() != mean.size()) throw ParameterError("scoring", "feature width does not match the residual fit");
  if (degenerate) return 0.0;
  const Vector u = l2_normalize(z);
  Vector centered(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) centered[c] = u[c] - mean[c];
  Vector coeff(basis.cols(), 0.0);
  for (std::size_t r = 0; r < basis.rows(); ++r)
    for (std::size_t j = 0; j < basis.cols(); ++j) coeff[j] += basis(r, j) * centered[r];
  double sq = 0.0;
  for (std::size_t r = 0; r < basis.rows(); ++r) {
    double proj = 0.0;
    for (std::size_t j = 0; j < basis.cols(); ++j) proj += basis(r, j) * coeff[j];
    const double e = centered[r] - proj;
    sq += e * e;
  }
  return std::sqrt(sq);
}

VimScorer VimScorer::fit(const Tensor2& train_features, const Tensor2& train_logits, ResidualScorer residual) {
  if (train_features.rows() != train_logits.rows() || train_features.rows() == 0) {
    throw ParameterError("scoring", "ViM fit needs matching, non-empty features and logits");
  }
  double max_logit = 0.0;
  double res = 0.0;
  for (std::size_t i = 0; i < train_features.rows(); ++i) {
    max_logit += score_maxlogit(train_logits.row(i));
    res += residual.residual(train_features.row(i));
  }
  const auto n = static_cast<double>(train_features.rows());
  if (!(res / n > 0.0)) throw NumericalError("scoring", "ViM fit: mean training residual is zero");
  VimScorer v;
  v.alpha = (max_logit / n) / (res / n);
  v.residual = std::move(residual);
  return v;
}

double vim_from_virtual_logit(std::span<const double> logits, double virtual_logit) {
  Vector extended(logits.begin(), logits.end());
  extended.push_back(virtual_logit);
  return -softmax(extended).back();
}

double VimScorer::score(std::span<const double> z, std::span<const double> logits) const {
  return vim_from_virtual_logit(logits, alpha * residual.residual(z));
}

Vector normalize_scores(std::span<const double> scores) {
  Vector out(scores.size(), 0.5);
  if (scores.empty()) return out;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
  return out;
}

std::string_view scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::Mahalanobis: return "mahalanobis";
    case ScorerKind::Energy: return "energy";
    case ScorerKind::Msp: return "msp";
    case ScorerKind::MaxLogit: return "maxlogit";
    case ScorerKind::Residual: return "residual";
    case ScorerKind::Vim: return "vim";
  }
  return "unknown";
}

ScorerKind parse_scorer(std::string_view name) {
  for (ScorerKind k : kAllScorers)
    if (scorer_name(k) == name) return k;
  throw ParameterError("scoring", "unknown scorer '" + std::string(name) +
                                      "' (expected mahalanobis, energy, msp, maxlogit, residual, vim or all)");
}

std::vector<ScorerKind> parse_scorer_selection(std::string_view name) {
  if (name == "all") return {kAllScorers.begin(), kAllScorers.end()};
  return {parse_scorer(name)};
}

ScorerState fit_scorers(const Tensor2& train_features, std::span<const int> train_labels,
                        const Tensor2& train_logits, std::size_t num_classes) {
  ScorerState s;
  s.stats = fit_class_stats(train_features, train_labels, num_classes);
  s.residual = ResidualScorer::fit(train_features, num_classes);
  if (!s.residual.degenerate) {
    s.vim = VimScorer::fit(train_features, train_logits, s.residual);
    s.vim_ready = true;
  }
  return s;
}

Vector score_rows(ScorerKind kind, const ScorerState& state, const Tensor2& features, const Tensor2& logits) {
  if (kind == ScorerKind::Mahalanobis) return score_mahalanobis(features, state.stats);
  if (kind == ScorerKind::Vim && !state.vim_ready) {
    throw ContractError("scoring", "ViM is unavailable: the residual subspace is degenerate (K >= D)");
  }
  Vector out(features.rows());
  kernels::parallel_for(features.rows(), [&](std::size_t i) {
    switch (kind) {
      case ScorerKind::Energy: out[i] = score_energy(logits.row(i)); break;
      case ScorerKind::Msp: out[i] = score_msp(logits.row(i)); break;
      case ScorerKind::MaxLogit: out[i] = score_maxlogit(logits.row(i)); break;
      case ScorerKind::Residual: out[i] = state.residual.score(features.row(i)); break;
      case ScorerKind::Vim: out[i] = state.vim.score(features.row(i), logits.row(i)); break;
      case ScorerKind::Mahalanobis: break;
    }
  });
  return out;
}

}  // namespace mintood
