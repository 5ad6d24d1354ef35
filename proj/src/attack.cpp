#include "chiron/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace chiron {

std::string_view attack_model_name(AttackModel model) {
  switch (model) {
    case AttackModel::random: return "random";
    case AttackModel::average: return "average";
    case AttackModel::bandwagon: return "bandwagon";
  }
  return "?";
}

AttackModel parse_attack_model(std::string_view name) {
  if (name == "random") return AttackModel::random;
  if (name == "average") return AttackModel::average;
  if (name == "bandwagon") return AttackModel::bandwagon;
  throw std::invalid_argument("unknown attack model '" + std::string(name) + "'");
}

std::vector<int> select_targets(const RatingMatrix& ratings, int count, std::uint64_t seed) {
  std::vector<int> eligible;
  for (int i = 0; i < ratings.items(); ++i) {
    if (!ratings.by_item(i).empty()) eligible.push_back(i);
  }
  if (count < 0 || static_cast<std::size_t>(count) > eligible.size()) {
    throw std::invalid_argument("cannot select " + std::to_string(count) + " targets from " +
                                std::to_string(eligible.size()) + " rated items");
  }
  Rng rng = make_rng(seed, "attack.targets");
  std::vector<int> chosen;
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), count, rng);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<int> popular_items(const RatingMatrix& ratings, int count) {
  std::vector<int> order(static_cast<std::size_t>(ratings.items()));
  std::iota(order.begin(), order.end(), 0);
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(count, 0)), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](int a, int b) {
                      const auto ca = ratings.by_item(a).size();
                      const auto cb = ratings.by_item(b).size();
                      return ca != cb ? ca > cb : a < b;
                    });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

int default_filler_size(const RatingMatrix& ratings) {
  if (ratings.users() == 0) return 0;
  return static_cast<int>(std::lround(static_cast<double>(ratings.entries()) / ratings.users()));
}

std::size_t profile_count(const AttackSpec& spec, int genuine_users) {
  return static_cast<std::size_t>(std::llround(spec.attack_size * genuine_users));
}

AttackSpec resolve(const AttackSpec& spec, const RatingMatrix& ratings) {
  if (!(spec.attack_size > 0.0) || !std::isfinite(spec.attack_size)) {
    throw std::invalid_argument("attack_size must be > 0");
  }
  AttackSpec out = spec;
  if (out.target_items.empty()) out.target_items = select_targets(ratings, spec.target_count, spec.seed);
  std::sort(out.target_items.begin(), out.target_items.end());
  out.target_items.erase(std::unique(out.target_items.begin(), out.target_items.end()), out.target_items.end());
  if (out.target_items.empty()) throw std::invalid_argument("attack needs at least one target item");
  for (int t : out.target_items) {
    if (t < 0 || t >= ratings.items()) throw std::invalid_argument("target item out of range");
  }

  if (out.model == AttackModel::bandwagon) {
    if (out.popular_items.empty()) {
      // the most popular items that are not already targets
      const auto ranked = popular_items(ratings, spec.popular_count + static_cast<int>(out.target_items.size()));
      std::vector<int> pick;
      std::vector<int> by_count(ranked);
      std::sort(by_count.begin(), by_count.end(), [&](int a, int b) {
        const auto ca = ratings.by_item(a).size();
        const auto cb = ratings.by_item(b).size();
        return ca != cb ? ca > cb : a < b;
      });
      for (int i : by_count) {
        if (static_cast<int>(pick.size()) == spec.popular_count) break;
        if (!std::binary_search(out.target_items.begin(), out.target_items.end(), i)) pick.push_back(i);
      }
      out.popular_items = std::move(pick);
    }
    std::sort(out.popular_items.begin(), out.popular_items.end());
    out.popular_items.erase(std::unique(out.popular_items.begin(), out.popular_items.end()),
                            out.popular_items.end());
    for (int p : out.popular_items) {
      if (p < 0 || p >= ratings.items()) throw std::invalid_argument("popular item out of range");
      if (std::binary_search(out.target_items.begin(), out.target_items.end(), p)) {
        throw std::invalid_argument("popular item " + std::to_string(p) + " is also a target");
      }
    }
  } else {
    out.popular_items.clear();
  }

  if (!out.filler_size) out.filler_size = default_filler_size(ratings);
  const int available = ratings.items() - static_cast<int>(out.target_items.size() + out.popular_items.size());
  if (*out.filler_size < 0 || *out.filler_size > available) {
    throw std::invalid_argument("filler_size " + std::to_string(*out.filler_size) + " exceeds the " +
                                std::to_string(available) + " non-target items");
  }
  return out;
}

FillerSampler::FillerSampler(AttackModel model, const RatingMatrix& ratings)
    : scale_(ratings.scale()),
      global_(ratings.empty() ? (scale_.min_rating + scale_.max_rating) / 2.0 : global_mean(ratings)),
      centers_(static_cast<std::size_t>(ratings.items()), global_) {
  if (model == AttackModel::average) {
    for (int i = 0; i < ratings.items(); ++i) {
      if (auto m = item_mean(ratings, i)) centers_[static_cast<std::size_t>(i)] = *m;
    }
  }
}

double FillerSampler::center(int item) const { return centers_.at(static_cast<std::size_t>(item)); }

double FillerSampler::draw_unclamped(int item, Rng& rng) const {
  std::normal_distribution<double> normal(center(item), kFillerStddev);
  return normal(rng);
}

int FillerSampler::draw(int item, Rng& rng) const {
  const double v = std::round(draw_unclamped(item, rng));
  return static_cast<int>(std::clamp(v, static_cast<double>(scale_.min_rating),
                                     static_cast<double>(scale_.max_rating)));
}

AttackProfileSet generate(const AttackSpec& spec, const RatingMatrix& ratings) {
  AttackProfileSet set;
  set.spec = resolve(spec, ratings);
  const AttackSpec& s = set.spec;
  const int max_rating = ratings.scale().max_rating;

  std::vector<char> reserved(static_cast<std::size_t>(ratings.items()), 0);
  for (int t : s.target_items) reserved[static_cast<std::size_t>(t)] = 1;
  for (int p : s.popular_items) reserved[static_cast<std::size_t>(p)] = 1;
  std::vector<int> pool;
  for (int i = 0; i < ratings.items(); ++i) {
    if (!reserved[static_cast<std::size_t>(i)]) pool.push_back(i);
  }

  const FillerSampler sampler(s.model, ratings);
  const std::size_t count = profile_count(s, ratings.users());
  set.profiles.resize(count);
  for (std::size_t n = 0; n < count; ++n) {
    // one stream per profile so profile n does not depend on earlier draws
    Rng rng = make_rng(s.seed, "attack.profile", n);
    std::vector<int> fillers;
    std::sample(pool.begin(), pool.end(), std::back_inserter(fillers), *s.filler_size, rng);
    auto& out = set.profiles[n].ratings;
    out.reserve(fillers.size() + s.target_items.size() + s.popular_items.size());
    for (int t : s.target_items) out.emplace_back(t, max_rating);
    for (int p : s.popular_items) out.emplace_back(p, max_rating);
    for (int f : fillers) out.emplace_back(f, sampler.draw(f, rng));
    std::sort(out.begin(), out.end());
  }
  return set;
}

InjectedRatings inject(const RatingMatrix& ratings, const AttackProfileSet& profiles) {
  const auto triples = ratings.triples();
  std::vector<Triple> all(triples.begin(), triples.end());
  std::vector<std::string> user_ids = ratings.user_ids();
  InjectedRatings out;
  for (std::size_t n = 0; n < profiles.profiles.size(); ++n) {
    const int user = ratings.users() + static_cast<int>(n);
    out.attacker_users.push_back(user);
    user_ids.push_back("attacker:" + std::to_string(n));
    for (const auto& [item, rating] : profiles.profiles[n].ratings) all.push_back(Triple{user, item, rating});
  }
  out.ratings = RatingMatrix::from_triples(ratings.users() + static_cast<int>(profiles.profiles.size()),
                                           ratings.items(), ratings.scale(), std::move(all),
                                           std::move(user_ids), ratings.item_ids());
  return out;
}

void write_profiles(const std::filesystem::path& path, const RatingMatrix& ratings,
                    const AttackProfileSet& profiles, FileFormat format) {
  const char sep = separator_of(format);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t n = 0; n < profiles.profiles.size(); ++n) {
    for (const auto& [item, rating] : profiles.profiles[n].ratings) {
      out << "attacker:" << n << sep << ratings.item_ids()[static_cast<std::size_t>(item)] << sep << rating << '\n';
    }
  }
  std::ofstream meta(path.string() + ".meta");
  if (!meta) throw DataError("cannot write " + path.string() + ".meta");
  const AttackSpec& s = profiles.spec;
  meta << "model " << attack_model_name(s.model) << '\n'
       << "attack_size " << s.attack_size << '\n'
       << "filler_size " << s.filler_size.value_or(0) << '\n'
       << "seed " << s.seed << '\n'
       << "targets";
  for (int t : s.target_items) meta << ' ' << t;
  meta << "\npopular";
  for (int p : s.popular_items) meta << ' ' << p;
  meta << "\nattacker_users";
  for (std::size_t n = 0; n < profiles.profiles.size(); ++n) meta << ' ' << ratings.users() + static_cast<int>(n);
  meta << '\n';
}

}  // namespace chiron
