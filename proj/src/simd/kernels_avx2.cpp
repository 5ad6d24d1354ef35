#include <immintrin.h>

#include <cassert>

#include "chiron/simd/kernels.hpp"

namespace chiron::simd::avx2 {
namespace {

inline std::int64_t hsum_epi64(__m256i v) {
  __m128i lo = _mm256_castsi256_si128(v);
  __m128i hi = _mm256_extracti128_si256(v, 1);
  __m128i s = _mm_add_epi64(lo, hi);
  return _mm_cvtsi128_si64(s) + _mm_extract_epi64(s, 1);
}

inline __m256i widen_add_epi32(__m256i acc64, __m256i v32) {
  acc64 = _mm256_add_epi64(acc64, _mm256_cvtepi32_epi64(_mm256_castsi256_si128(v32)));
  return _mm256_add_epi64(acc64, _mm256_cvtepi32_epi64(_mm256_extracti128_si256(v32, 1)));
}

inline double hsum_pd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

// int32 product accumulators hold at most 4 * 127^2 per chunk and lane
constexpr std::size_t kFlushChunks = 1 << 14;

}  // namespace

CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const std::uint8_t* pa = a.data();
  const std::uint8_t* pb = b.data();

  const __m256i zero = _mm256_setzero_si256();
  const __m256i ones8 = _mm256_set1_epi8(1);
  const __m256i ones16 = _mm256_set1_epi16(1);

  __m256i count = zero, sum_a = zero, sum_b = zero, agree = zero;
  __m256i sum_aa = zero, sum_bb = zero, sum_ab = zero;
  __m256i aa32 = zero, bb32 = zero, ab32 = zero;

  std::size_t c = 0;
  std::size_t chunks = 0;
  for (; c + 32 <= n; c += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pa + c));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pb + c));
    const __m256i missing = _mm256_or_si256(_mm256_cmpeq_epi8(va, zero), _mm256_cmpeq_epi8(vb, zero));
    const __m256i am = _mm256_andnot_si256(missing, va);
    const __m256i bm = _mm256_andnot_si256(missing, vb);
    const __m256i both = _mm256_andnot_si256(missing, ones8);
    const __m256i same = _mm256_and_si256(_mm256_cmpeq_epi8(am, bm), both);

    count = _mm256_add_epi64(count, _mm256_sad_epu8(both, zero));
    sum_a = _mm256_add_epi64(sum_a, _mm256_sad_epu8(am, zero));
    sum_b = _mm256_add_epi64(sum_b, _mm256_sad_epu8(bm, zero));
    agree = _mm256_add_epi64(agree, _mm256_sad_epu8(same, zero));

    aa32 = _mm256_add_epi32(aa32, _mm256_madd_epi16(_mm256_maddubs_epi16(am, am), ones16));
    bb32 = _mm256_add_epi32(bb32, _mm256_madd_epi16(_mm256_maddubs_epi16(bm, bm), ones16));
    ab32 = _mm256_add_epi32(ab32, _mm256_madd_epi16(_mm256_maddubs_epi16(am, bm), ones16));

    if (++chunks == kFlushChunks) {
      sum_aa = widen_add_epi32(sum_aa, aa32);
      sum_bb = widen_add_epi32(sum_bb, bb32);
      sum_ab = widen_add_epi32(sum_ab, ab32);
      aa32 = bb32 = ab32 = zero;
      chunks = 0;
    }
  }
  sum_aa = widen_add_epi32(sum_aa, aa32);
  sum_bb = widen_add_epi32(sum_bb, bb32);
  sum_ab = widen_add_epi32(sum_ab, ab32);

  CoStats s;
  s.count = hsum_epi64(count);
  s.sum_a = hsum_epi64(sum_a);
  s.sum_b = hsum_epi64(sum_b);
  s.sum_aa = hsum_epi64(sum_aa);
  s.sum_bb = hsum_epi64(sum_bb);
  s.sum_ab = hsum_epi64(sum_ab);
  s.agree = hsum_epi64(agree);

  for (; c < n; ++c) {
    const std::int64_t x = pa[c];
    const std::int64_t y = pb[c];
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
  const std::size_t n = a.size();
  __m256d dot = _mm256_setzero_pd();
  __m256d na = _mm256_setzero_pd();
  __m256d nb = _mm256_setzero_pd();

  std::size_t c = 0;
  for (; c + 4 <= n; c += 4) {
    const __m256d x = _mm256_cvtps_pd(_mm_loadu_ps(a.data() + c));
    const __m256d y = _mm256_cvtps_pd(_mm_loadu_ps(b.data() + c));
    const __m256d mx = _mm256_cvtps_pd(_mm_loadu_ps(mask_a.data() + c));
    const __m256d my = _mm256_cvtps_pd(_mm_loadu_ps(mask_b.data() + c));
    dot = _mm256_fmadd_pd(x, y, dot);
    na = _mm256_fmadd_pd(_mm256_mul_pd(x, x), my, na);
    nb = _mm256_fmadd_pd(_mm256_mul_pd(y, y), mx, nb);
  }
  MaskedCross r{hsum_pd(dot), hsum_pd(na), hsum_pd(nb)};
  for (; c < n; ++c) {
    const double x = a[c];
    const double y = b[c];
    r.dot += x * y;
    r.norm_a += x * x * mask_b[c];
    r.norm_b += y * y * mask_a[c];
  }
  return r;
}

}  // namespace chiron::simd::avx2
