#include "chiron/dense_rows.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chiron {
namespace {

std::size_t padded(int columns) {
  return (static_cast<std::size_t>(columns) + 31) / 32 * 32;
}

int other_size(const RatingMatrix& ratings, Axis axis) {
  return axis == Axis::users ? ratings.items() : ratings.users();
}

}  // namespace

std::string_view axis_name(Axis axis) { return axis == Axis::users ? "users" : "items"; }

Axis parse_axis(std::string_view name) {
  if (name == "users") return Axis::users;
  if (name == "items") return Axis::items;
  throw std::invalid_argument("unknown axis '" + std::string(name) + "'");
}

int axis_size(const RatingMatrix& ratings, Axis axis) {
  return axis == Axis::users ? ratings.users() : ratings.items();
}

std::span<const Cell> axis_cells(const RatingMatrix& ratings, Axis axis, int node) {
  return axis == Axis::users ? ratings.by_user(node) : ratings.by_item(node);
}

LevelRows::LevelRows(const RatingMatrix& ratings, Axis axis)
    : rows_(axis_size(ratings, axis)), stride_(padded(other_size(ratings, axis))) {
  if (ratings.scale().levels() > simd::kMaxLevelValue) {
    throw std::invalid_argument("rating scale has too many levels for byte rows");
  }
  data_.assign(static_cast<std::size_t>(rows_) * stride_, 0);
  const int min_rating = ratings.scale().min_rating;
  for (int r = 0; r < rows_; ++r) {
    std::uint8_t* row = data_.data() + static_cast<std::size_t>(r) * stride_;
    for (const Cell& c : axis_cells(ratings, axis, r)) {
      row[c.index] = static_cast<std::uint8_t>(c.rating - min_rating + 1);
    }
  }
}

DeviationRows::DeviationRows(const RatingMatrix& ratings, Axis axis,
                             std::span<const double> column_offsets)
    : rows_(axis_size(ratings, axis)), stride_(padded(other_size(ratings, axis))) {
  if (column_offsets.size() != static_cast<std::size_t>(other_size(ratings, axis))) {
    throw std::invalid_argument("column offset count does not match the other axis");
  }
  values_.assign(static_cast<std::size_t>(rows_) * stride_, 0.0f);
  masks_.assign(static_cast<std::size_t>(rows_) * stride_, 0.0f);
  for (int r = 0; r < rows_; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * stride_;
    for (const Cell& c : axis_cells(ratings, axis, r)) {
      const auto col = static_cast<std::size_t>(c.index);
      values_[base + col] = static_cast<float>(c.rating - column_offsets[col]);
      masks_[base + col] = 1.0f;
    }
  }
}

simd::MaskedCross DeviationRows::cross(int a, int b) const {
  return simd::masked_cross(values(a), mask(a), values(b), mask(b));
}

std::optional<double> pearson_from_stats(const simd::CoStats& s) {
  if (s.count < 2) return std::nullopt;
  const std::int64_t var_a = s.count * s.sum_aa - s.sum_a * s.sum_a;
  const std::int64_t var_b = s.count * s.sum_bb - s.sum_b * s.sum_b;
  if (var_a <= 0 || var_b <= 0) return std::nullopt;
  const std::int64_t cov = s.count * s.sum_ab - s.sum_a * s.sum_b;
  const double r = static_cast<double>(cov) /
                   std::sqrt(static_cast<double>(var_a) * static_cast<double>(var_b));
  return std::clamp(r, -1.0, 1.0);
}

simd::CoStats sparse_co_stats(const RatingMatrix& ratings, Axis axis, int a, int b) {
  auto ra = axis_cells(ratings, axis, a);
  auto rb = axis_cells(ratings, axis, b);
  const int shift = 1 - ratings.scale().min_rating;
  simd::CoStats s;
  std::size_t x = 0;
  std::size_t y = 0;
  while (x < ra.size() && y < rb.size()) {
    if (ra[x].index < rb[y].index) {
      ++x;
    } else if (rb[y].index < ra[x].index) {
      ++y;
    } else {
      const std::int64_t u = ra[x].rating + shift;
      const std::int64_t v = rb[y].rating + shift;
      ++s.count;
      s.sum_a += u;
      s.sum_b += v;
      s.sum_aa += u * u;
      s.sum_bb += v * v;
      s.sum_ab += u * v;
      s.agree += u == v;
      ++x;
      ++y;
    }
  }
  return s;
}

}  // namespace chiron
