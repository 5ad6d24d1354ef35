#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "chiron/baselines.hpp"
#include "chiron/evaluation.hpp"
#include "support.hpp"

using namespace chiron;

namespace {

// Pearson over co-rated entries with co-rated means
std::optional<double> naive_pearson(const std::vector<std::optional<int>>& a, const std::vector<std::optional<int>>& b) {
  std::vector<std::pair<double, double>> both;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c] && b[c]) both.emplace_back(*a[c], *b[c]);
  }
  if (both.size() < 2) return std::nullopt;
  double ma = 0, mb = 0;
  for (auto [x, y] : both) {
    ma += x;
    mb += y;
  }
  ma /= static_cast<double>(both.size());
  mb /= static_cast<double>(both.size());
  double sab = 0, saa = 0, sbb = 0;
  for (auto [x, y] : both) {
    sab += (x - ma) * (y - mb);
    saa += (x - ma) * (x - ma);
    sbb += (y - mb) * (y - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::optional<int>> user_row(const RatingMatrix& m, int u) {
  std::vector<std::optional<int>> row(static_cast<std::size_t>(m.items()));
  for (int i = 0; i < m.items(); ++i) row[static_cast<std::size_t>(i)] = m.rating(u, i);
  return row;
}

double naive_user_knn(const RatingMatrix& m, int user, int item, int k) {
  auto mean = [&](int u) {
    const auto cells = m.by_user(u);
    double s = 0;
    for (const Cell& c : cells) s += c.rating;
    return s / static_cast<double>(cells.size());
  };
  struct N {
    double sim;
    int user;
  };
  std::vector<N> ns;
  for (int v = 0; v < m.users(); ++v) {
    if (v == user || !m.rating(v, item)) continue;
    // similarities are stored in single precision, so rank them that way
    if (auto s = naive_pearson(user_row(m, user), user_row(m, v))) ns.push_back({static_cast<float>(*s), v});
  }
  std::stable_sort(ns.begin(), ns.end(), [](const N& a, const N& b) { return a.sim > b.sim; });
  if (ns.size() > static_cast<std::size_t>(k)) ns.resize(static_cast<std::size_t>(k));
  double num = 0, den = 0;
  for (const N& n : ns) {
    num += n.sim * (*m.rating(n.user, item) - mean(n.user));
    den += std::abs(n.sim);
  }
  return std::clamp(mean(user) + (den > 0 ? num / den : 0.0), 1.0, 5.0);
}

double naive_adjusted_cosine(const RatingMatrix& m, int a, int b) {
  std::vector<double> offset(static_cast<std::size_t>(m.users()));
  for (int u = 0; u < m.users(); ++u) offset[static_cast<std::size_t>(u)] = *user_mean(m, u);
  double dot = 0, na = 0, nb = 0;
  bool overlap = false;
  for (int u = 0; u < m.users(); ++u) {
    const auto ra = m.rating(u, a);
    const auto rb = m.rating(u, b);
    const double o = offset[static_cast<std::size_t>(u)];
    if (ra) na += (*ra - o) * (*ra - o);
    if (rb) nb += (*rb - o) * (*rb - o);
    if (ra && rb) {
      dot += (*ra - o) * (*rb - o);
      overlap = true;
    }
  }
  if (!overlap) return std::nan("");
  return dot / std::sqrt(na * nb);
}

void expect_in_scale(const Recommender& r, const RatingMatrix& m) {
  for (int u = 0; u < m.users(); ++u) {
    for (int i = 0; i < m.items(); ++i) {
      const double p = r.predict(u, i);
      ASSERT_TRUE(std::isfinite(p)) << r.name();
      ASSERT_GE(p, m.scale().min_rating) << r.name();
      ASSERT_LE(p, m.scale().max_rating) << r.name();
    }
  }
}

}  // namespace

TEST(GlobalMean, PredictsTrainingMean) {
  const auto m = RatingMatrix::from_triples(2, 2, {}, {{0, 0, 5}, {1, 1, 2}});
  GlobalMean g;
  g.fit(m);
  EXPECT_DOUBLE_EQ(g.predict(0, 1), 3.5);
}

TEST(UserKnn, SimilarityAndPredictionMatchNaive) {
  const RatingMatrix m = chiron::testing::clustered_matrix(25, 20, 0.5, 21);
  for (int k : {3, 20}) {
    UserKnn knn(k);
    knn.fit(m);
    for (int a = 0; a < m.users(); ++a) {
      for (int b = 0; b < m.users(); ++b) {
        if (a == b) continue;
        const auto want = naive_pearson(user_row(m, a), user_row(m, b));
        const double got = knn.similarity(a, b);
        if (want) {
          EXPECT_NEAR(got, *want, 1e-6);
        } else {
          EXPECT_TRUE(std::isnan(got));
        }
      }
    }
    for (int u = 0; u < m.users(); u += 3) {
      for (int i = 0; i < m.items(); ++i) EXPECT_NEAR(knn.predict(u, i), naive_user_knn(m, u, i, k), 1e-5);
    }
  }
}

TEST(ItemKnn, AdjustedCosineMatchesNaive) {
  const RatingMatrix m = chiron::testing::clustered_matrix(25, 20, 0.5, 22);
  ItemKnn knn(20);
  knn.fit(m);
  for (int a = 0; a < m.items(); ++a) {
    for (int b = a + 1; b < m.items(); ++b) {
      const double want = naive_adjusted_cosine(m, a, b);
      if (std::isnan(want)) continue;
      EXPECT_NEAR(knn.similarity(a, b), want, 1e-6);
      EXPECT_EQ(knn.similarity(a, b), knn.similarity(b, a));
    }
  }
}

TEST(ItemKnn, FallsBackToItemMean) {
  // user 1 rated nothing, so every prediction for it falls back
  const auto m = RatingMatrix::from_triples(3, 2, {}, {{0, 0, 4}, {0, 1, 2}, {2, 0, 2}});
  ItemKnn knn(5);
  knn.fit(m);
  EXPECT_DOUBLE_EQ(knn.predict(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(knn.predict(1, 1), 2.0);
}

TEST(SlopeOne, DeviationsAndPrediction) {
  // classic toy example: two users, item 0 and 1 co-rated
  const auto m = RatingMatrix::from_triples(3, 3, {},
                                            {{0, 0, 5}, {0, 1, 3}, {0, 2, 2}, {1, 0, 3}, {1, 1, 4}, {2, 1, 2}, {2, 2, 5}});
  SlopeOne s;
  s.fit(m);
  EXPECT_NEAR(s.deviation(0, 1).first, ((5 - 3) + (3 - 4)) / 2.0, 1e-6);
  EXPECT_EQ(s.deviation(0, 1).second, 2);
  EXPECT_NEAR(s.deviation(1, 0).first, -0.5, 1e-6);
  EXPECT_NEAR(s.deviation(2, 0).first, -3.0, 1e-6);
  EXPECT_EQ(s.deviation(2, 0).second, 1);
  // user 2 has items 1 and 2: (dev(0,1) + 2) * 2 + (dev(0,2) + 5) * 1, over 3
  const double want = ((0.5 + 2) * 2 + (3.0 + 5) * 1) / 3.0;
  EXPECT_NEAR(s.predict(2, 0), std::min(want, 5.0), 1e-6);
  // user 1: item 2 from items 0 and 1
  const double want2 = ((-3.0 + 3) * 1 + (s.deviation(2, 1).first + 4) * 2) / 3.0;
  EXPECT_NEAR(s.predict(1, 2), want2, 1e-6);
}

TEST(RegularizedSvd, DeterministicAndLearns) {
  const RatingMatrix m = chiron::testing::clustered_matrix(60, 50, 0.3, 23);
  RegSvdParams p;
  p.seed = 5;
  p.epochs = 60;
  RegularizedSvd a(p), b(p);
  a.fit(m);
  b.fit(m);
  for (int u = 0; u < m.users(); u += 7) EXPECT_EQ(a.raw_score(u, 3), b.raw_score(u, 3));
  ASSERT_EQ(a.loss_history().size(), 60u);
  EXPECT_LT(a.loss_history().back(), 0.5 * a.loss_history().front());
  expect_in_scale(a, m);
  p.seed = 6;
  RegularizedSvd c(p);
  c.fit(m);
  EXPECT_NE(c.raw_score(0, 0), a.raw_score(0, 0));
}

TEST(RegularizedSvd, DivergenceIsReported) {
  const RatingMatrix m = chiron::testing::clustered_matrix(30, 30, 0.4, 24);
  RegSvdParams p;
  p.learning_rate = 50.0;
  p.epochs = 20;
  RegularizedSvd svd(p);
  EXPECT_THROW(svd.fit(m), FitError);
}

TEST(Nmf, MonotoneLossAndNonnegativeFactors) {
  const RatingMatrix m = chiron::testing::clustered_matrix(40, 30, 0.4, 25);
  NmfParams p;
  p.epochs = 80;
  Nmf nmf(p);
  nmf.fit(m);
  const auto& loss = nmf.loss_history();
  ASSERT_EQ(loss.size(), 80u);
  for (std::size_t e = 1; e < loss.size(); ++e) EXPECT_LE(loss[e], loss[e - 1] * (1 + 1e-9)) << "epoch " << e;
  EXPECT_GE(nmf.min_factor(), p.floor);
  expect_in_scale(nmf, m);
  EXPECT_THROW(Nmf(NmfParams{0, 10, 1e-9, 0}), std::invalid_argument);
}

TEST(AllMethods, PredictEveryPairInScale) {
  // includes a user and an item with no training data
  RatingMatrix base = chiron::testing::clustered_matrix(30, 25, 0.3, 26);
  std::vector<Triple> triples;
  for (const Triple& t : base.triples()) {
    if (t.user != 29 && t.item != 24) triples.push_back(t);
  }
  const RatingMatrix m = RatingMatrix::from_triples(30, 25, {}, triples);
  MethodSettings settings;
  settings.chiron.fit.restarts = 1;
  settings.chiron.lambda1 = 0.5;
  settings.reg_svd.epochs = 20;
  settings.nmf.epochs = 20;
  for (const std::string& name : method_names()) {
    auto method = make_method(name, settings, 1);
    EXPECT_EQ(method->name(), name);
    method->fit(m);
    expect_in_scale(*method, m);
  }
  EXPECT_THROW(make_method("nope", settings, 0), std::invalid_argument);
}

TEST(AllMethods, BeatGlobalMeanOnStructuredData) {
  const RatingMatrix all = chiron::testing::clustered_matrix(80, 60, 0.3, 27);
  const DatasetSplit s = split(all, {}, 4);
  GlobalMean g;
  g.fit(s.train);
  auto test_mae = [&](const Recommender& r) {
    double e = 0;
    for (const Triple& t : s.test.triples()) e += std::abs(r.predict(t.user, t.item) - t.rating);
    return e / static_cast<double>(s.test.entries());
  };
  const double floor_mae = test_mae(g);
  MethodSettings settings;
  settings.chiron.fit.restarts = 1;
  for (const std::string& name : method_names()) {
    if (name == "global_mean") continue;
    auto method = make_method(name, settings, 2);
    method->tune(s.train, s.validation);
    method->fit(s.train);
    EXPECT_LT(test_mae(*method), floor_mae) << name;
  }
}
