#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "chiron/attack.hpp"
#include "support.hpp"

using namespace chiron;

namespace {

RatingMatrix sample_matrix() { return chiron::testing::random_matrix(50, 40, 0.25, 31); }

}  // namespace

TEST(AttackModel, NamesRoundTrip) {
  for (AttackModel m : {AttackModel::random, AttackModel::average, AttackModel::bandwagon}) {
    EXPECT_EQ(parse_attack_model(attack_model_name(m)), m);
  }
  EXPECT_THROW(parse_attack_model("segment"), std::invalid_argument);
}

TEST(Targets, SampledAmongRatedItemsSortedAndSeeded) {
  const RatingMatrix m = sample_matrix();
  const auto t = select_targets(m, 10, 3);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
  EXPECT_EQ(std::set<int>(t.begin(), t.end()).size(), 10u);
  for (int i : t) EXPECT_FALSE(m.by_item(i).empty());
  EXPECT_EQ(select_targets(m, 10, 3), t);
  EXPECT_NE(select_targets(m, 10, 4), t);
  EXPECT_THROW(select_targets(m, 1000, 3), std::invalid_argument);
}

TEST(Popular, TopByCountTiesToLowerIndex) {
  const auto m = RatingMatrix::from_triples(3, 4, {},
                                            {{0, 2, 1}, {1, 2, 1}, {2, 2, 1}, {0, 1, 1}, {1, 1, 1}, {0, 3, 1}, {1, 3, 1}, {0, 0, 1}});
  EXPECT_EQ(popular_items(m, 1), (std::vector<int>{2}));
  EXPECT_EQ(popular_items(m, 2), (std::vector<int>{1, 2}));
  EXPECT_EQ(popular_items(m, 3), (std::vector<int>{1, 2, 3}));
}

TEST(Resolve, FillsDefaultsAndValidates) {
  const RatingMatrix m = sample_matrix();
  AttackSpec spec;
  spec.seed = 8;
  const AttackSpec r = resolve(spec, m);
  EXPECT_EQ(r.target_items.size(), static_cast<std::size_t>(kDefaultTargetCount));
  EXPECT_EQ(*r.filler_size, default_filler_size(m));
  EXPECT_EQ(default_filler_size(m),
            static_cast<int>(std::lround(static_cast<double>(m.entries()) / m.users())));
  EXPECT_TRUE(r.popular_items.empty());

  spec.model = AttackModel::bandwagon;
  const AttackSpec b = resolve(spec, m);
  EXPECT_EQ(b.popular_items.size(), static_cast<std::size_t>(kDefaultPopularCount));
  for (int p : b.popular_items) EXPECT_FALSE(std::binary_search(b.target_items.begin(), b.target_items.end(), p));

  AttackSpec bad = spec;
  bad.filler_size = m.items();
  EXPECT_THROW(resolve(bad, m), std::invalid_argument);
  bad = spec;
  bad.attack_size = 0;
  EXPECT_THROW(resolve(bad, m), std::invalid_argument);
  bad = spec;
  bad.target_items = {1, 2};
  bad.popular_items = {2};
  EXPECT_THROW(resolve(bad, m), std::invalid_argument);
  bad.popular_items = {};
  bad.target_items = {m.items()};
  EXPECT_THROW(resolve(bad, m), std::invalid_argument);
}

TEST(Generate, ProfileShape) {
  const RatingMatrix m = sample_matrix();
  for (AttackModel model : {AttackModel::random, AttackModel::average, AttackModel::bandwagon}) {
    AttackSpec spec;
    spec.model = model;
    spec.attack_size = 0.3;
    spec.target_count = 3;
    spec.popular_count = 4;
    spec.filler_size = 7;
    spec.seed = 11;
    const AttackProfileSet set = generate(spec, m);
    ASSERT_EQ(set.profiles.size(), profile_count(set.spec, m.users()));
    EXPECT_EQ(set.profiles.size(), 15u);
    for (const AttackProfile& p : set.profiles) {
      const std::size_t want = 3 + 7 + (model == AttackModel::bandwagon ? 4 : 0);
      ASSERT_EQ(p.ratings.size(), want);
      std::set<int> items;
      for (const auto& [item, rating] : p.ratings) {
        items.insert(item);
        EXPECT_GE(rating, 1);
        EXPECT_LE(rating, 5);
        if (std::binary_search(set.spec.target_items.begin(), set.spec.target_items.end(), item) ||
            std::binary_search(set.spec.popular_items.begin(), set.spec.popular_items.end(), item)) {
          EXPECT_EQ(rating, 5);
        }
      }
      EXPECT_EQ(items.size(), want);
      EXPECT_TRUE(std::is_sorted(p.ratings.begin(), p.ratings.end()));
    }
  }
}

TEST(Generate, DeterministicAndPrefixStable) {
  const RatingMatrix m = sample_matrix();
  AttackSpec spec;
  spec.seed = 12;
  spec.attack_size = 0.2;
  const AttackProfileSet small = generate(spec, m);
  EXPECT_EQ(generate(spec, m).profiles.front().ratings, small.profiles.front().ratings);
  spec.attack_size = 0.6;
  const AttackProfileSet large = generate(spec, m);
  for (std::size_t n = 0; n < small.profiles.size(); ++n) EXPECT_EQ(large.profiles[n].ratings, small.profiles[n].ratings);
}

TEST(FillerSampler, CentersPerModel) {
  const auto m = RatingMatrix::from_triples(2, 3, {}, {{0, 0, 5}, {1, 0, 4}, {0, 1, 1}});
  const FillerSampler avg(AttackModel::average, m);
  EXPECT_DOUBLE_EQ(avg.center(0), 4.5);
  EXPECT_DOUBLE_EQ(avg.center(1), 1.0);
  EXPECT_DOUBLE_EQ(avg.center(2), 10.0 / 3.0);  // unrated item falls back to the global mean
  const FillerSampler rnd(AttackModel::random, m);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(rnd.center(i), 10.0 / 3.0);
}

TEST(FillerSampler, DrawMoments) {
  const auto m = RatingMatrix::from_triples(2, 1, {}, {{0, 0, 3}, {1, 0, 4}});
  const FillerSampler s(AttackModel::average, m);
  Rng rng(13);
  const int n = 20000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = s.draw_unclamped(0, rng);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 3.5, 4 * kFillerStddev / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), kFillerStddev, 0.05 * kFillerStddev);
  for (int i = 0; i < 1000; ++i) {
    const int r = s.draw(0, rng);
    ASSERT_GE(r, 1);
    ASSERT_LE(r, 5);
  }
}

TEST(Inject, AppendsAttackersOnly) {
  const RatingMatrix m = sample_matrix();
  AttackSpec spec;
  spec.seed = 14;
  spec.attack_size = 0.1;
  const AttackProfileSet set = generate(spec, m);
  const InjectedRatings inj = inject(m, set);
  EXPECT_EQ(inj.ratings.users(), m.users() + 5);
  EXPECT_EQ(inj.ratings.items(), m.items());
  std::size_t added = 0;
  for (const auto& p : set.profiles) added += p.ratings.size();
  EXPECT_EQ(inj.ratings.entries(), m.entries() + added);
  for (int u = 0; u < m.users(); ++u) {
    for (int i = 0; i < m.items(); ++i) EXPECT_EQ(inj.ratings.rating(u, i), m.rating(u, i));
  }
  ASSERT_EQ(inj.attacker_users.size(), 5u);
  EXPECT_EQ(inj.attacker_users.front(), m.users());
  EXPECT_EQ(inj.ratings.user_ids()[static_cast<std::size_t>(m.users())], "attacker:0");
}

TEST(WriteProfiles, LinesAndSidecar) {
  const RatingMatrix m = sample_matrix();
  AttackSpec spec;
  spec.seed = 15;
  spec.attack_size = 0.04;
  spec.filler_size = 2;
  spec.target_items = {0};
  const AttackProfileSet set = generate(spec, m);
  chiron::testing::TempDir dir("profiles");
  write_profiles(dir.path() / "p.tsv", m, set, FileFormat::tab_separated);
  const std::string text = chiron::testing::read_file(dir.path() / "p.tsv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_EQ(text.rfind("attacker:0\t", 0), 0u);
  const std::string meta = chiron::testing::read_file(dir.path() / "p.tsv.meta");
  EXPECT_NE(meta.find("model average"), std::string::npos);
  EXPECT_NE(meta.find("targets 0\n"), std::string::npos);
  EXPECT_NE(meta.find("attacker_users 50 51\n"), std::string::npos);
}
