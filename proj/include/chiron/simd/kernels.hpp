#pragma once

// Pairwise row kernels behind the all-pairs similarity computations.
//
// Every kernel has a portable scalar reference in namespace `scalar` and, on
// x86-64 builds, an AVX2 variant in namespace `avx2`. The free functions in
// namespace `simd` dispatch to the best variant the running CPU supports.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace chiron::simd {

/// Co-observation moments of two level rows.
///
/// Rows hold one byte per column: 0 = missing, otherwise level + 1. Only
/// columns present in both rows contribute. Integer arithmetic throughout, so
/// every variant returns bit-identical results.
struct CoStats {
  std::int64_t count = 0;   // columns rated in both rows
  std::int64_t sum_a = 0;   // sum of a over co-rated columns
  std::int64_t sum_b = 0;
  std::int64_t sum_aa = 0;
  std::int64_t sum_bb = 0;
  std::int64_t sum_ab = 0;
  std::int64_t agree = 0;   // co-rated columns with a == b

  bool operator==(const CoStats&) const = default;
};

/// Masked cross terms of two real rows with presence masks (1.0f / 0.0f):
/// dot = sum a*b, norm_a = sum a^2 [b present], norm_b = sum b^2 [a present].
/// Values must be zero where the mask is zero.
struct MaskedCross {
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
};

/// Largest level value the byte kernels accept (keeps 16-bit partial products exact).
inline constexpr int kMaxLevelValue = 127;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
/// Variant currently used by the dispatching functions.
Isa active_isa();
/// Best variant supported by this CPU and build.
Isa best_supported_isa();
/// Overrides dispatch (tests, benchmarking). Throws if the variant is unavailable.
void force_isa(Isa isa);

CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
MaskedCross masked_cross(std::span<const float> a, std::span<const float> mask_a,
                         std::span<const float> b, std::span<const float> mask_b);

namespace scalar {
CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
MaskedCross masked_cross(std::span<const float> a, std::span<const float> mask_a,
                         std::span<const float> b, std::span<const float> mask_b);
}  // namespace scalar

#if defined(CHIRON_HAVE_AVX2)
namespace avx2 {
CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
MaskedCross masked_cross(std::span<const float> a, std::span<const float> mask_a,
                         std::span<const float> b, std::span<const float> mask_b);
}  // namespace avx2
#endif

}  // namespace chiron::simd
