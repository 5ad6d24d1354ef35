#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiron {

/// Ordinal rating range min_rating..max_rating. Internally ratings are
/// addressed by level = rating - min_rating, so level is in [0, levels()).
struct RatingScale {
  int min_rating = 1;
  int max_rating = 5;

  /// Throws std::invalid_argument unless min_rating < max_rating.
  static RatingScale make(int min_rating, int max_rating);

  int levels() const { return max_rating - min_rating + 1; }
  bool contains(int rating) const { return rating >= min_rating && rating <= max_rating; }
  int level_of(int rating) const { return rating - min_rating; }
  int rating_of(int level) const { return level + min_rating; }
  double clamp(double value) const;

  bool operator==(const RatingScale&) const = default;
};

struct Triple {
  std::int32_t user;
  std::int32_t item;
  std::int32_t rating;

  bool operator==(const Triple&) const = default;
};

/// One entry of a per-user or per-item index: the other axis' index and the rating.
struct Cell {
  std::int32_t index;
  std::int32_t rating;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Error raised while reading a ratings file; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Immutable sparse m x n rating matrix with CSR indices along both axes.
///
/// Triples are kept sorted by (user, item); the per-user index is sorted by
/// item and the per-item index by user, so both are exact transposes of the
/// triple set. External IDs are kept positionally (user_ids()[j] is the
/// external ID of internal user j).
class RatingMatrix {
 public:
  RatingMatrix() = default;

  /// Builds the matrix, validating index bounds, rating range and uniqueness
  /// of (user, item). Throws DataError on violation.
  static RatingMatrix from_triples(int users, int items, RatingScale scale,
                                   std::vector<Triple> triples,
                                   std::vector<std::string> user_ids = {},
                                   std::vector<std::string> item_ids = {});

  int users() const { return users_; }
  int items() const { return items_; }
  std::size_t entries() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const RatingScale& scale() const { return scale_; }

  std::span<const Triple> triples() const { return triples_; }
  std::span<const Cell> by_user(int user) const;
  std::span<const Cell> by_item(int item) const;
  std::optional<int> rating(int user, int item) const;

  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  /// Same index space, ids and scale, different entry subset.
  RatingMatrix with_triples(std::vector<Triple> triples) const;

 private:
  int users_ = 0;
  int items_ = 0;
  RatingScale scale_;
  std::vector<Triple> triples_;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<Cell> user_cells_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<Cell> item_cells_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

enum class FileFormat { tab_separated, comma_separated };

FileFormat parse_file_format(const std::string& name);
char separator_of(FileFormat format);

/// Reads `user <sep> item <sep> rating [<sep> timestamp]` lines. Blank lines
/// and lines starting with '#' are skipped. External IDs are compacted to
/// dense indices in order of first appearance.
RatingMatrix parse_ratings(const std::filesystem::path& path, FileFormat format,
                           RatingScale scale = {});

/// Writes triples with external IDs, sorted by (user, item).
void write_ratings(const std::filesystem::path& path, const RatingMatrix& ratings,
                   FileFormat format);

/// `external_id <tab> internal_index` per line.
void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  RatingMatrix train;
  RatingMatrix validation;
  RatingMatrix test;
  std::uint64_t seed = 0;
};

/// Largest-remainder apportionment of `total` into the three fractions.
std::array<std::size_t, 3> split_sizes(std::size_t total, const SplitFractions& fractions);

/// Uniform entry-level random partition, deterministic per seed.
DatasetSplit split(const RatingMatrix& ratings, const SplitFractions& fractions,
                   std::uint64_t seed);

/// nullopt when the item has no ratings.
std::optional<double> item_mean(const RatingMatrix& ratings, int item);
std::optional<double> user_mean(const RatingMatrix& ratings, int user);
/// Throws DataError on an empty matrix.
double global_mean(const RatingMatrix& ratings);

}  // namespace chiron
