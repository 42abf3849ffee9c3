#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mintood/error.hpp"
#include "mintood/metrics.hpp"
#include "mintood/random.hpp"
#include "oracles.hpp"

using namespace mintood;

namespace {

struct Instance {
  Vector scores;
  std::vector<int> is_id;
};

// Scores rounded to a coarse grid so ties are common.
Instance random_instance(Rng& rng, std::size_t max_n = 50) {
  Instance in;
  const std::size_t n = 2 + rng.uniform_index(max_n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = i == 0 ? 1 : (i == 1 ? 0 : static_cast<int>(rng.uniform_index(2)));
    in.is_id.push_back(id);
    in.scores.push_back(std::round(4.0 * (rng.normal() + (id ? 0.7 : 0.0))) / 4.0);
  }
  return in;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("id metrics: perfect predictions") {
    const std::vector<int> g = {0, 1, 2, 2, 1};
    const IdMetrics m = id_metrics(g, g, 3);
    for (double v : {m.acc, m.precision, m.recall, m.f1, m.weighted_precision, m.weighted_f1}) CHECK(v == 1.0);
  }

  TEST_CASE("id metrics: two-class hand case") {
    const std::vector<int> preds = {0, 0, 1, 1};
    const std::vector<int> golds = {0, 1, 1, 1};
    const IdMetrics m = id_metrics(preds, golds, 2);
    CHECK(m.acc == 0.75);
    CHECK(m.per_class_precision == Vector{0.5, 1.0});
    CHECK(m.per_class_recall[0] == 1.0);
    CHECK(m.per_class_recall[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(m.precision == 0.75);
    CHECK(m.recall == doctest::Approx(5.0 / 6).epsilon(1e-15));
    CHECK(m.f1 == doctest::Approx(2 * 0.75 * (5.0 / 6) / (0.75 + 5.0 / 6)).epsilon(1e-15));
    CHECK(m.weighted_precision == doctest::Approx((0.5 + 3 * 1.0) / 4).epsilon(1e-15));
    CHECK(m.weighted_f1 == doctest::Approx((2.0 / 3 + 3 * 0.8) / 4).epsilon(1e-15));
    CHECK(m.confusion.at(1, 0) == 1);
    CHECK(m.confusion.total() == 4);
  }

  TEST_CASE("id metrics: balanced supports make WF1 the mean per-class F1") {
    const std::vector<int> preds = {0, 1, 1, 2, 2, 0};
    const std::vector<int> golds = {0, 0, 1, 1, 2, 2};
    const IdMetrics m = id_metrics(preds, golds, 3);
    const double mean = std::accumulate(m.per_class_f1.begin(), m.per_class_f1.end(), 0.0) / 3;
    CHECK(m.weighted_f1 == doctest::Approx(mean).epsilon(1e-15));
  }

  TEST_CASE("id metrics: empty classes count as 0 and errors") {
    const std::vector<int> preds = {0, 0};
    const std::vector<int> golds = {0, 0};
    const IdMetrics m = id_metrics(preds, golds, 3);
    CHECK(m.per_class_precision[1] == 0.0);
    CHECK(m.per_class_recall[2] == 0.0);
    CHECK_THROWS_AS(id_metrics(preds, std::vector<int>{0}, 3), ParameterError);
    CHECK_THROWS_AS(id_metrics(std::vector<int>{5}, std::vector<int>{0}, 3), ParameterError);
  }

  TEST_CASE("id metrics: swapping two predictions moves ACC by 2/T or 0") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
      std::vector<int> golds(12);
      std::vector<int> preds(12);
      for (std::size_t i = 0; i < 12; ++i) {
        golds[i] = static_cast<int>(rng.uniform_index(3));
        preds[i] = rng.uniform() < 0.6 ? golds[i] : static_cast<int>(rng.uniform_index(3));
      }
      const double before = id_metrics(preds, golds, 3).acc;
      std::swap(preds[rng.uniform_index(12)], preds[rng.uniform_index(12)]);
      const double delta = std::abs(id_metrics(preds, golds, 3).acc - before) * 12;
      CHECK((std::abs(delta) < 1e-12 || std::abs(delta - 1) < 1e-12 || std::abs(delta - 2) < 1e-12));
    }
  }

  TEST_CASE("auroc hand cases") {
    CHECK(roc_auroc(Vector{3, 4, 1, 2}, std::vector<int>{1, 1, 0, 0}).auroc == 1.0);
    CHECK(roc_auroc(Vector{1, 1, 1}, std::vector<int>{1, 0, 1}).auroc == 0.5);
    // One inversion among 3 x 3 pairs.
    const Vector s = {6, 5, 3, 4, 2, 1};
    const std::vector<int> f = {1, 1, 1, 0, 0, 0};
    CHECK(roc_auroc(s, f).auroc == 8.0 / 9);
    CHECK(roc_auroc(s, f).auroc == oracle::mann_whitney(s, f));
    const auto curve = roc_auroc(s, f).curve;
    CHECK(curve.front().x == 0.0);
    CHECK(curve.back().y == 1.0);
    CHECK_THROWS_AS(roc_auroc(Vector{1, 2}, std::vector<int>{1, 1}), UndefinedMetricError);
  }

  TEST_CASE("auroc equals pair counting exactly") {
    Rng rng(2);
    for (int t = 0; t < 300; ++t) {
      const Instance in = random_instance(rng, t < 20 ? 500 : 50);
      CHECK(roc_auroc(in.scores, in.is_id).auroc == oracle::mann_whitney(in.scores, in.is_id));
    }
  }

  TEST_CASE("auroc under negation and flag swaps") {
    // Negating the scores alone, or swapping the flags alone, gives the
    // complement; doing both restores the original value.
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      const Instance in = random_instance(rng);
      const double a = roc_auroc(in.scores, in.is_id).auroc;
      Instance neg = in;
      for (double& s : neg.scores) s = -s;
      Instance swapped = in;
      for (int& f : swapped.is_id) f = 1 - f;
      Instance both = neg;
      both.is_id = swapped.is_id;
      CHECK(std::abs(a + roc_auroc(neg.scores, neg.is_id).auroc - 1.0) <= 1e-12);
      CHECK(std::abs(a + roc_auroc(swapped.scores, swapped.is_id).auroc - 1.0) <= 1e-12);
      CHECK(roc_auroc(both.scores, both.is_id).auroc == a);
    }
  }

  TEST_CASE("aupr") {
    const Vector s = {0.9, 0.8, 0.2, 0.1};
    const std::vector<int> f = {1, 1, 0, 0};
    CHECK(aupr(s, f, PositiveClass::Id) == 1.0);
    CHECK(aupr(s, f, PositiveClass::Ood) == 1.0);
    const Vector hand = {0.9, 0.3, 0.6, 0.1};
    const std::vector<int> hf = {1, 1, 0, 0};
    // ID sweep: 0.9 -> (R .5, P 1), 0.6 -> (.5, .5), 0.3 -> (1, 2/3).
    CHECK(aupr(hand, hf, PositiveClass::Id) == doctest::Approx(0.5 + 0.5 * 2.0 / 3).epsilon(1e-15));
    CHECK(aupr(hand, hf, PositiveClass::Id) == doctest::Approx(oracle::aupr(hand, hf, true)).epsilon(1e-15));
    CHECK(aupr(hand, hf, PositiveClass::Ood) == doctest::Approx(oracle::aupr(hand, hf, false)).epsilon(1e-15));
    CHECK_THROWS_AS(aupr(s, std::vector<int>{1, 1, 1, 1}, PositiveClass::Ood), UndefinedMetricError);
  }

  TEST_CASE("aupr matches threshold enumeration") {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
      const Instance in = random_instance(rng);
      for (bool idp : {true, false}) {
        const double ours = aupr(in.scores, in.is_id, idp ? PositiveClass::Id : PositiveClass::Ood);
        CHECK(std::abs(ours - oracle::aupr(in.scores, in.is_id, idp)) <= 1e-12);
      }
    }
  }

  TEST_CASE("aupr of random scores approaches the prevalence") {
    Rng rng(5);
    double total = 0.0;
    for (int t = 0; t < 100; ++t) {
      Vector s(200);
      std::vector<int> f(200);
      for (std::size_t i = 0; i < 200; ++i) {
        s[i] = rng.uniform();
        f[i] = i < 60 ? 1 : 0;
      }
      total += aupr(s, f, PositiveClass::Id);
    }
    CHECK(std::abs(total / 100 - 0.3) < 0.05);
  }

  TEST_CASE("fpr95 and der") {
    CHECK(detection_error(0.95, 0.5) == 0.275);
    // 20 ID scores 10..29, OOD at 15.5 and 0: the largest qualifying
    // threshold keeps 19 ID and one OOD.
    Vector s;
    std::vector<int> f;
    for (int i = 10; i < 30; ++i) {
      s.push_back(i);
      f.push_back(1);
    }
    s.insert(s.end(), {15.5, 0.0});
    f.insert(f.end(), {0, 0});
    const Fpr95Result r = fpr95_der(s, f);
    CHECK(r.threshold == 11.0);
    CHECK(r.tpr == 0.95);
    CHECK(r.fpr95 == 0.5);
    CHECK(r.der == 0.275);
    CHECK_FALSE(r.coarse_tpr);

    const Fpr95Result perfect = fpr95_der(Vector{5, 6, 7, 1, 2}, std::vector<int>{1, 1, 1, 0, 0});
    CHECK(perfect.fpr95 == 0.0);
    CHECK(perfect.der <= 0.025);
    CHECK(perfect.coarse_tpr);
  }

  TEST_CASE("fpr95 matches an exhaustive scan") {
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
      const Instance in = random_instance(rng, t < 20 ? 40 : 50);
      const Fpr95Result r = fpr95_der(in.scores, in.is_id);
      const oracle::Fpr95 o = oracle::fpr95(in.scores, in.is_id);
      CHECK(std::abs(r.fpr95 - o.fpr) <= 1e-12);
      CHECK(std::abs(r.tpr - o.tpr) <= 1e-12);
      CHECK(std::abs(r.der - o.der) <= 1e-12);
    }
  }

  TEST_CASE("ranking metrics ignore monotone transforms and permutations") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
      Instance in = random_instance(rng);
      const OodMetrics a = ood_metrics(in.scores, in.is_id);
      Instance moved = in;
      for (double& s : moved.scores) s = 2 * s + 7;
      const OodMetrics b = ood_metrics(moved.scores, moved.is_id);
      CHECK(a.auroc == b.auroc);
      CHECK(a.aupr_in == b.aupr_in);
      CHECK(a.aupr_out == b.aupr_out);
      CHECK(a.fpr95 == b.fpr95);
      CHECK(a.der == b.der);

      std::vector<std::size_t> order(in.scores.size());
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span<std::size_t>(order));
      Instance perm;
      for (std::size_t i : order) {
        perm.scores.push_back(in.scores[i]);
        perm.is_id.push_back(in.is_id[i]);
      }
      const OodMetrics c = ood_metrics(perm.scores, perm.is_id);
      CHECK(a.auroc == c.auroc);
      CHECK(a.aupr_in == c.aupr_in);
      CHECK(a.fpr95 == c.fpr95);
    }
  }
}
