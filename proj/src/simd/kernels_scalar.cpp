#include <cassert>

#include "chiron/simd/kernels.hpp"

namespace chiron::simd::scalar {

CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  assert(a.size() == b.size());
  CoStats s;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const std::int64_t x = a[c];
    const std::int64_t y = b[c];
    if (x == 0 || y == 0) continue;
    ++s.count;
    s.sum_a += x;
    s.sum_b += y;
    s.sum_aa += x * x;
    s.sum_bb += y * y;
    s.sum_ab += x * y;
    s.agree += x == y;
  }
  return s;
}

MaskedCross masked_cross(std::span<const float> a, std::span<const float> mask_a,
                         std::span<const float> b, std::span<const float> mask_b) {
  assert(a.size() == b.size() && a.size() == mask_a.size() && b.size() == mask_b.size());
  MaskedCross r;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double x = a[c];
    const double y = b[c];
    r.dot += x * y;
    r.norm_a += x * x * mask_b[c];
    r.norm_b += y * y * mask_a[c];
  }
  return r;
}

}  // namespace chiron::simd::scalar
