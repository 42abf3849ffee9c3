#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace oracle {

void jacobi_eigen(const Matrix& input, std::vector<double>& values, Matrix& vectors) {
  const std::size_t n = input.size();
  Matrix a = input;
  vectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) vectors[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k][p];
          const double vkq = vectors[k][q];
          vectors[k][p] = c * vkp - s * vkq;
          vectors[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Matrix sorted(n, std::vector<double>(n));
  values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted[i][j] = vectors[i][order[j]];
  }
  vectors = sorted;
}

Matrix inverse(const Matrix& input) {
  const std::size_t n = input.size();
  Matrix a = input;
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-300) throw std::runtime_error("oracle::inverse: singular");
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = a[col][col];
    for (std::size_t k = 0; k < n; ++k) {
      a[col][k] /= d;
      inv[col][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[col][k];
        inv[r][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

double mahalanobis(std::span<const double> z, const Matrix& features, std::span<const int> labels, int classes) {
  const std::size_t dim = z.size();
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < classes; ++k) {
    std::vector<double> mu(dim, 0.0);
    double count = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (labels[i] != k) continue;
      for (std::size_t d = 0; d < dim; ++d) mu[d] += features[i][d];
      count += 1.0;
    }
    for (double& v : mu) v /= count;
    Matrix cov(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (labels[i] != k) continue;
      for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) cov[r][c] += (features[i][r] - mu[r]) * (features[i][c] - mu[c]);
    }
    double trace = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) cov[r][c] /= (count - 1.0);
      trace += cov[r][r];
    }
    const double eps = std::max(1e-6 * trace / static_cast<double>(dim), 1e-12);
    for (std::size_t r = 0; r < dim; ++r) cov[r][r] += eps;
    const Matrix p = inverse(cov);
    double q = 0.0;
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) q += (z[r] - mu[r]) * p[r][c] * (z[c] - mu[c]);
    best = std::min(best, q);
  }
  return -best;
}

double mann_whitney(std::span<const double> scores, std::span<const int> is_id) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_id[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (is_id[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

double aupr(std::span<const double> scores, std::span<const int> is_id, bool id_positive) {
  std::set<double> unique(scores.begin(), scores.end());
  std::vector<double> thresholds(unique.begin(), unique.end());
  // Sweep from the strictest threshold to the loosest.
  if (id_positive) std::reverse(thresholds.begin(), thresholds.end());
  double positives = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) positives += ((is_id[i] != 0) == id_positive) ? 1.0 : 0.0;
  double area = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool accepted = id_positive ? scores[i] >= t : scores[i] <= t;
      if (!accepted) continue;
      if ((is_id[i] != 0) == id_positive) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
    }
    const double recall = tp / positives;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

Fpr95 fpr95(std::span<const double> scores, std::span<const int> is_id) {
  std::set<double> unique(scores.begin(), scores.end());
  double n_id = 0.0;
  double n_ood = 0.0;
  for (int f : is_id) (f ? n_id : n_ood) += 1.0;
  Fpr95 best;
  double best_t = -std::numeric_limits<double>::infinity();
  for (double t : unique) {
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] < t) continue;
      (is_id[i] ? tp : fp) += 1.0;
    }
    if (tp / n_id >= 0.95 && t > best_t) {
      best_t = t;
      best.tpr = tp / n_id;
      best.fpr = fp / n_ood;
    }
  }
  best.der = 0.5 * (1.0 - best.tpr) + 0.5 * best.fpr;
  return best;
}

double contrastive(const Matrix& views, std::span<const int> view_labels, double tau) {
  const std::size_t n = views.size();
  const std::size_t b = n / 2;
  Matrix unit = views;
  for (auto& row : unit) {
    double s = 0.0;
    for (double v : row) s += v * v;
    s = std::sqrt(s);
    for (double& v : row) v /= s;
  }
  auto sim = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < unit[i].size(); ++d) s += unit[i][d] * unit[j][d];
    return s;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) denom += std::exp(sim(i, a) / tau);
    std::vector<std::size_t> pos;
    if (view_labels[i] < 0) {
      pos.push_back(i < b ? i + b : i - b);
    } else {
      for (std::size_t p = 0; p < n; ++p)
        if (p != i && view_labels[p] == view_labels[i]) pos.push_back(p);
    }
    double term = 0.0;
    for (std::size_t p : pos) term += -std::log(std::exp(sim(i, p) / tau) / denom);
    total += term / static_cast<double>(pos.size());
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
