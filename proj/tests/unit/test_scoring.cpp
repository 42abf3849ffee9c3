#include <doctest.h>

#include <cmath>

#include "mintood/error.hpp"
#include "mintood/linalg.hpp"
#include "mintood/ops.hpp"
#include "mintood/random.hpp"
#include "mintood/scoring.hpp"
#include "oracles.hpp"

using namespace mintood;

namespace {

Tensor2 random_features(std::size_t n, std::size_t d, Rng& rng) {
  Tensor2 t(n, d);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("class statistics") {
    Tensor2 f(4, 2);
    f(0, 0) = 0;
    f(1, 0) = 2;
    f(2, 0) = 5;
    f(2, 1) = 5;
    f(3, 0) = 5;
    f(3, 1) = 5;
    const std::vector<int> labels = {0, 0, 1, 1};
    const ClassStats s = fit_class_stats(f, labels, 2);
    REQUIRE(s.num_classes() == 2);
    CHECK(s.means[0] == Vector{1.0, 0.0});
    CHECK(s.covariances[0] == Tensor2(2, 2, std::vector<double>{2, 0, 0, 0}));
    CHECK(s.means[1] == Vector{5.0, 5.0});
    CHECK(s.covariances[1] == Tensor2(2, 2));
    CHECK(s.ridge[1] == 1e-12);
    CHECK(s.counts == std::vector<std::size_t>{2, 2});
  }

  TEST_CASE("a class with one sample is named in the error") {
    Tensor2 f(3, 2);
    const std::vector<int> labels = {0, 0, 2};
    try {
      fit_class_stats(f, labels, 3);
      FAIL("expected InsufficientDataError");
    } catch (const InsufficientDataError& e) {
      CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
  }

  TEST_CASE("mahalanobis hand cases") {
    Rng rng(1);
    const Tensor2 f = random_features(30, 3, rng);
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 3);
    const ClassStats s = fit_class_stats(f, labels, 3);
    for (const auto& mu : s.means) CHECK(score_mahalanobis(mu, s) == 0.0);

    ClassStats ident;
    ident.means = {Vector{0, 0}, Vector{10, 0}};
    ident.precisions = {Tensor2::identity(2), Tensor2::identity(2)};
    CHECK(score_mahalanobis(Vector{0, 2}, ident) == -4.0);
    CHECK(score_mahalanobis(Vector{8, 0}, ident) == -4.0);
    Tensor2 zs(2, 2, std::vector<double>{0, 2, 8, 0});
    CHECK(score_mahalanobis(zs, ident) == Vector{-4.0, -4.0});
  }

  TEST_CASE("mahalanobis matches the explicit loop oracle") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
      const std::size_t k = 2 + rng.uniform_index(3);
      const std::size_t d = 1 + rng.uniform_index(8);
      const std::size_t n = 3 * k + rng.uniform_index(50 - 3 * k);
      Tensor2 f(n, d);
      std::vector<int> labels(n);
      oracle::Matrix rows(n, std::vector<double>(d));
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % k);
        for (std::size_t c = 0; c < d; ++c) rows[i][c] = f(i, c) = rng.normal() + 2.0 * labels[i];
      }
      const ClassStats s = fit_class_stats(f, labels, k);
      Vector z(d);
      for (double& v : z) v = 1.5 * rng.normal();
      const double ours = score_mahalanobis(z, s);
      const double theirs = oracle::mahalanobis(z, rows, labels, static_cast<int>(k));
      CHECK(std::abs(ours - theirs) <= 1e-8 * std::max(1.0, std::abs(theirs)));
      CHECK(ours <= 0.0);
    }
  }

  TEST_CASE("logit scorers") {
    CHECK(score_msp(Vector{0, 0, 0, 0}) == 0.25);
    const Vector peaked = {16, 0, 0};
    CHECK(score_maxlogit(peaked) == 16.0);
    CHECK(score_energy(peaked) > 16.0);
    CHECK(score_energy(peaked) < 16.0 + std::log(3.0));
    const double e = std::exp(1.0);
    CHECK(score_msp(Vector{2, 1, 0}) == doctest::Approx(e * e / (e * e + e + 1)).epsilon(1e-15));
    CHECK_THROWS_AS(score_energy(Vector{}), ParameterError);
  }

  TEST_CASE("residual: points on the mean or inside the subspace score 0") {
    // Four unit vectors symmetric about the axes: mean 0, top direction e1.
    const double c = 0.8;
    const double s = 0.6;
    Tensor2 f(4, 2, std::vector<double>{c, s, c, -s, -c, s, -c, -s});
    const ResidualScorer r = ResidualScorer::fit(f, 1);
    CHECK(std::abs(r.mean[0]) < 1e-15);
    CHECK(std::abs(r.mean[1]) < 1e-15);
    CHECK(std::abs(r.score(Vector{3, 0})) < 1e-12);
    CHECK(r.residual(Vector{0, 2}) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.residual(f.row(i)) == doctest::Approx(s).epsilon(1e-12));

    Tensor2 same(3, 3, std::vector<double>{1, 2, 2, 1, 2, 2, 1, 2, 2});
    const ResidualScorer on_mean = ResidualScorer::fit(same, 1);
    CHECK(std::abs(on_mean.score(Vector{2, 4, 4})) < 1e-12);
  }

  TEST_CASE("residual matches a Jacobi eigen oracle and ignores scale") {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
      const Tensor2 f = random_features(40, 5, rng);
      const ResidualScorer r = ResidualScorer::fit(f, 2);
      // Oracle: normalize, center, covariance, Jacobi, project out top 2.
      oracle::Matrix u(40, std::vector<double>(5));
      Vector mean(5, 0.0);
      for (std::size_t i = 0; i < 40; ++i) {
        double nrm = 0.0;
        for (std::size_t d = 0; d < 5; ++d) nrm += f(i, d) * f(i, d);
        for (std::size_t d = 0; d < 5; ++d) mean[d] += (u[i][d] = f(i, d) / std::sqrt(nrm)) / 40.0;
      }
      oracle::Matrix cov(5, std::vector<double>(5, 0.0));
      for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t a = 0; a < 5; ++a)
          for (std::size_t b = 0; b < 5; ++b) cov[a][b] += (u[i][a] - mean[a]) * (u[i][b] - mean[b]) / 39.0;
      Vector values;
      oracle::Matrix vectors;
      oracle::jacobi_eigen(cov, values, vectors);
      Vector z(5);
      for (double& v : z) v = rng.normal();
      const Vector zn = l2_normalize(z);
      Vector diff(5);
      for (std::size_t d = 0; d < 5; ++d) diff[d] = zn[d] - mean[d];
      for (std::size_t k = 0; k < 2; ++k) {
        double p = 0.0;
        for (std::size_t d = 0; d < 5; ++d) p += vectors[d][k] * diff[d];
        for (std::size_t d = 0; d < 5; ++d) diff[d] -= p * vectors[d][k];
      }
      CHECK(std::abs(r.residual(z) - norm(diff)) <= 1e-8);
      Vector z9 = z;
      for (double& v : z9) v *= 9.0;
      CHECK(std::abs(r.residual(z9) - r.residual(z)) <= 1e-12);
    }
  }

  TEST_CASE("residual degenerates when K >= D") {
    Rng rng(4);
    const ResidualScorer r = ResidualScorer::fit(random_features(20, 3, rng), 3);
    CHECK(r.degenerate);
    CHECK(r.residual(Vector{1, 2, 3}) == 0.0);
  }

  TEST_CASE("vim") {
    const double e = std::exp(1.0);
    CHECK(vim_from_virtual_logit(Vector{2, 1}, 3.0) ==
          doctest::Approx(-std::exp(3.0) / (e * e + e + std::exp(3.0))).epsilon(1e-15));
    CHECK(vim_from_virtual_logit(Vector{0, 0, 0}, 0.0) == -0.25);

    const double c = 0.8;
    const double s = 0.6;
    Tensor2 f(4, 2, std::vector<double>{c, s, c, -s, -c, s, -c, -s});
    Tensor2 logits(4, 3, std::vector<double>{5, 1, 0, 2, 5, 1, 5, 5, 5, 0, 0, 5});
    const VimScorer v = VimScorer::fit(f, logits, ResidualScorer::fit(f, 1));
    CHECK(v.alpha == doctest::Approx(5.0 / s).epsilon(1e-12));
    // A feature on the subspace has a zero virtual logit.
    CHECK(v.score(Vector{1, 0}, Vector{1, 2}) == doctest::Approx(vim_from_virtual_logit(Vector{1, 2}, 0.0)).epsilon(1e-12));

    Tensor2 flat(3, 2, std::vector<double>{1, 0, 2, 0, 3, 0});
    CHECK_THROWS_AS(VimScorer::fit(flat, Tensor2(3, 2), ResidualScorer::fit(flat, 1)), NumericalError);
  }

  TEST_CASE("normalization") {
    CHECK(normalize_scores(Vector{1, 2, 3}) == Vector{0.0, 0.5, 1.0});
    CHECK(normalize_scores(Vector{0, 0.25, 1}) == Vector{0.0, 0.25, 1.0});
    CHECK(normalize_scores(Vector{4, 4}) == Vector{0.5, 0.5});
  }

  TEST_CASE("scorer names") {
    CHECK(parse_scorer_selection("all").size() == 6);
    CHECK(parse_scorer_selection("vim") == std::vector<ScorerKind>{ScorerKind::Vim});
    for (ScorerKind k : kAllScorers) CHECK(parse_scorer(scorer_name(k)) == k);
    CHECK_THROWS_AS(parse_scorer("odin"), ParameterError);
  }

  TEST_CASE("fitted state scores every row") {
    Rng rng(5);
    const Tensor2 f = random_features(30, 4, rng);
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 2);
    const Tensor2 logits = random_features(30, 2, rng);
    const ScorerState st = fit_scorers(f, labels, logits, 2);
    CHECK(st.vim_ready);
    for (ScorerKind k : kAllScorers) {
      const Vector s = score_rows(k, st, f, logits);
      CHECK(s.size() == 30);
      for (double v : s) CHECK(std::isfinite(v));
    }
    CHECK(score_rows(ScorerKind::MaxLogit, st, f, logits)[3] == score_maxlogit(logits.row(3)));
  }
}
