#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chiron/rating_matrix.hpp"
#include "chiron/rng.hpp"

namespace chiron {

enum class AttackModel { random, average, bandwagon };

std::string_view attack_model_name(AttackModel model);
AttackModel parse_attack_model(std::string_view name);

inline constexpr double kFillerStddev = 1.1;
inline constexpr int kDefaultTargetCount = 20;
inline constexpr int kDefaultPopularCount = 10;

/// Push attack description. Empty optionals and lists are resolved against
/// the attacked matrix by resolve().
struct AttackSpec {
  AttackModel model = AttackModel::average;
  double attack_size = 1.0;  // profiles as a fraction of genuine users
  std::optional<int> filler_size;
  std::vector<int> target_items;
  std::vector<int> popular_items;  // bandwagon only
  int target_count = kDefaultTargetCount;
  int popular_count = kDefaultPopularCount;
  std::uint64_t seed = 0;
};

struct AttackProfile {
  std::vector<std::pair<int, int>> ratings;  // (item, rating), sorted by item
};

struct AttackProfileSet {
  AttackSpec spec;  // fully resolved
  std::vector<AttackProfile> profiles;
};

/// Uniform sample without replacement among items with at least one rating,
/// returned sorted.
std::vector<int> select_targets(const RatingMatrix& ratings, int count, std::uint64_t seed);

/// Top `count` items by rating count, ties to the lower index.
std::vector<int> popular_items(const RatingMatrix& ratings, int count);

/// Average genuine profile length, rounded.
int default_filler_size(const RatingMatrix& ratings);

std::size_t profile_count(const AttackSpec& spec, int genuine_users);

/// Fills defaults and checks the spec against the matrix. Throws
/// std::invalid_argument when the spec cannot be satisfied.
AttackSpec resolve(const AttackSpec& spec, const RatingMatrix& ratings);

/// Per-item filler rating distribution for one attack model.
class FillerSampler {
 public:
  FillerSampler(AttackModel model, const RatingMatrix& ratings);

  double center(int item) const;
  /// Unrounded Normal(center, 1.1) draw.
  double draw_unclamped(int item, Rng& rng) const;
  /// Rounded to the nearest level and clamped to the scale.
  int draw(int item, Rng& rng) const;

 private:
  RatingScale scale_;
  double global_ = 0.0;
  std::vector<double> centers_;
};

AttackProfileSet generate(const AttackSpec& spec, const RatingMatrix& ratings);

struct InjectedRatings {
  RatingMatrix ratings;
  std::vector<int> attacker_users;  // analysis metadata; models never see it
};

/// Appends one user per profile after the genuine users.
InjectedRatings inject(const RatingMatrix& ratings, const AttackProfileSet& profiles);

/// Writes the profiles as `attacker:<n> <sep> item_id <sep> rating` lines and
/// a `<path>.meta` sidecar with the resolved spec and attacker indices.
void write_profiles(const std::filesystem::path& path, const RatingMatrix& ratings,
                    const AttackProfileSet& profiles, FileFormat format);

}  // namespace chiron
