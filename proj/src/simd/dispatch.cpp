#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "chiron/simd/kernels.hpp"

namespace chiron::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CHIRON_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  // CHIRON_ISA=scalar pins the reference kernels
  if (const char* env = std::getenv("CHIRON_ISA"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::scalar;
  }
  return best_supported_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa best_supported_isa() {
  static const bool avx2 = cpu_has_avx2();
  return avx2 ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && best_supported_isa() != Isa::avx2) {
    throw std::runtime_error("AVX2 kernels are not available on this CPU or build");
  }
  current().store(isa, std::memory_order_relaxed);
}

CoStats co_stats(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
#if defined(CHIRON_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::co_stats(a, b);
#endif
  return scalar::co_stats(a, b);
}

MaskedCross masked_cross(std::span<const float> a, std::span<const float> mask_a,
                         std::span<const float> b, std::span<const float> mask_b) {
#if defined(CHIRON_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::masked_cross(a, mask_a, b, mask_b);
#endif
  return scalar::masked_cross(a, mask_a, b, mask_b);
}

}  // namespace chiron::simd
