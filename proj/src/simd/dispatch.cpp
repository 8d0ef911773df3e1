// Runtime selection between kernel variants. No intrinsics in this file.

#include <atomic>
#include <cstdlib>
#include <string>

#include "mevt/simd.hpp"

namespace mevt::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(MEVT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  Isa isa = best_available();
  if (const char* env = std::getenv("MEVT_SIMD")) {
    Isa requested;
    if (parse_isa(env, requested)) isa = requested;
  }
  if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

Isa best_available() noexcept { return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) noexcept {
  if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

bool parse_isa(std::string_view text, Isa& out) noexcept {
  if (text == "scalar") {
    out = Isa::Scalar;
  } else if (text == "avx2") {
    out = Isa::Avx2;
  } else if (text == "auto") {
    out = best_available();
  } else {
    return false;
  }
  return true;
}

#if defined(MEVT_HAVE_AVX2)
#define MEVT_DISPATCH(call)                                   \
  do {                                                        \
    if (active_isa() == Isa::Avx2) return avx2::call;         \
    return scalar::call;                                      \
  } while (0)
#else
#define MEVT_DISPATCH(call) return scalar::call
#endif

void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out) {
  MEVT_DISPATCH(block_minima(in, cluster, out));
}

std::size_t count_less(std::span<const double> v, double threshold) {
  MEVT_DISPATCH(count_less(v, threshold));
}

double sum(std::span<const double> v) { MEVT_DISPATCH(sum(v)); }

Moments2 moments2(std::span<const double> x, std::span<const double> y) {
  MEVT_DISPATCH(moments2(x, y));
}

void power_sums(std::span<const double> e, std::span<double> out) {
  MEVT_DISPATCH(power_sums(e, out));
}

LogTerms gpd_log_terms(std::span<const double> e, double c) {
  MEVT_DISPATCH(gpd_log_terms(e, c));
}

GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape) {
  MEVT_DISPATCH(gpd_terms(e, inv_scale, shape));
}

void pickands(std::span<const double> xt, std::span<const double> yt, double n,
              std::span<double> r, std::span<double> omega) {
  MEVT_DISPATCH(pickands(xt, yt, n, r, omega));
}

#undef MEVT_DISPATCH

}  // namespace mevt::simd
