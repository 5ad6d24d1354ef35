#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "chiron/rating_matrix.hpp"
#include "chiron/simd/kernels.hpp"

namespace chiron {

/// Which side of the rating matrix a graph or similarity lives on.
enum class Axis { users, items };

std::string_view axis_name(Axis axis);
Axis parse_axis(std::string_view name);
int axis_size(const RatingMatrix& ratings, Axis axis);
/// Index cells of one node: by_user for users, by_item for items.
std::span<const Cell> axis_cells(const RatingMatrix& ratings, Axis axis, int node);

/// Dense byte rows (level + 1, 0 = missing) for one axis of a rating matrix,
/// padded to a multiple of 32 columns so kernels see aligned lengths.
class LevelRows {
 public:
  LevelRows(const RatingMatrix& ratings, Axis axis);

  int rows() const { return rows_; }
  std::size_t stride() const { return stride_; }
  std::span<const std::uint8_t> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * stride_, stride_};
  }
  simd::CoStats stats(int a, int b) const { return simd::co_stats(row(a), row(b)); }

 private:
  int rows_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Dense real rows with presence masks for one axis. Each stored value is
/// rating - column_offset[other index]; missing cells hold 0 with mask 0.
class DeviationRows {
 public:
  DeviationRows(const RatingMatrix& ratings, Axis axis, std::span<const double> column_offsets);

  int rows() const { return rows_; }
  simd::MaskedCross cross(int a, int b) const;

 private:
  std::span<const float> values(int r) const {
    return {values_.data() + static_cast<std::size_t>(r) * stride_, stride_};
  }
  std::span<const float> mask(int r) const {
    return {masks_.data() + static_cast<std::size_t>(r) * stride_, stride_};
  }

  int rows_ = 0;
  std::size_t stride_ = 0;
  std::vector<float> values_;
  std::vector<float> masks_;
};

/// Strict upper triangle of an n x n pairwise table; at(a, b) requires a != b
/// and returns the record stored for (min, max). Orientation-dependent
/// quantities are the caller's business.
template <class Record>
class TriangularTable {
 public:
  TriangularTable() = default;

  /// Fills every pair a < b with fn(a, b).
  template <class Fn>
  TriangularTable(int n, Fn&& fn) : n_(n) {
    data_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n > 0 ? n - 1 : 0) / 2);
    std::size_t k = 0;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) data_[k++] = fn(a, b);
    }
  }

  int size() const { return n_; }
  const Record& at(int a, int b) const {
    if (a > b) std::swap(a, b);
    // rows before a hold (n-1) + (n-2) + ... + (n-a) entries
    const auto aa = static_cast<std::size_t>(a);
    const auto nn = static_cast<std::size_t>(n_);
    const std::size_t row_start = aa * (2 * nn - aa - 1) / 2;
    return data_[row_start + static_cast<std::size_t>(b - a - 1)];
  }

 private:
  int n_ = 0;
  std::vector<Record> data_;
};

/// Pearson correlation over co-observed entries from integer moments.
/// nullopt for fewer than 2 co-observations or zero variance on either side.
std::optional<double> pearson_from_stats(const simd::CoStats& s);

/// Co-observation moments between two nodes computed by merging their sparse
/// index lists (level + 1 encoding, same as LevelRows).
simd::CoStats sparse_co_stats(const RatingMatrix& ratings, Axis axis, int a, int b);

}  // namespace chiron
