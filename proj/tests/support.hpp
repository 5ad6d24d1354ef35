#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "chiron/rating_matrix.hpp"
#include "chiron/rng.hpp"

namespace chiron::testing {

/// Random matrix where each cell is observed with probability `density`.
inline RatingMatrix random_matrix(int users, int items, double density, std::uint64_t seed,
                                  RatingScale scale = {}) {
  Rng rng(seed);
  std::bernoulli_distribution observed(density);
  std::uniform_int_distribution<int> level(scale.min_rating, scale.max_rating);
  std::vector<Triple> triples;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (observed(rng)) triples.push_back(Triple{u, i, level(rng)});
    }
  }
  return RatingMatrix::from_triples(users, items, scale, std::move(triples));
}

/// Ratings with latent structure: per-user and per-item offsets plus two taste
/// groups where matching groups rate higher. Gives the models something real
/// to learn.
inline RatingMatrix clustered_matrix(int users, int items, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution observed(density);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::vector<Triple> triples;
  for (int u = 0; u < users; ++u) {
    for (int i = 0; i < items; ++i) {
      if (!observed(rng)) continue;
      const double offsets = 0.3 * ((u * 7) % 5 - 2) + 0.35 * ((i * 3) % 5 - 2);
      const double base = 3.1 + offsets + ((u % 2) == (i % 2) ? 0.7 : -0.7);
      const int r = static_cast<int>(std::lround(std::clamp(base + noise(rng), 1.0, 5.0)));
      triples.push_back(Triple{u, i, r});
    }
  }
  return RatingMatrix::from_triples(users, items, RatingScale{}, std::move(triples));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("chiron-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::ofstream(p) << contents;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace chiron::testing
