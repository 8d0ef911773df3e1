// AVX2 + FMA kernel variants. Compiled with -mavx2 -mfma -ffp-contract=off;
// only reached through the runtime dispatcher after a CPU feature check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mevt/simd.hpp"

namespace mevt::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmin(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_min_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_min_sd(m, _mm_unpackhi_pd(m, m)));
}

// Running log-sum kept as (mantissa product in [1,2), exponent sum) per lane.
// Multiplying mantissas and renormalising through the exponent bits avoids a
// vector log; one scalar log per lane is taken at the end.
struct LogAccumulator {
  __m256d mant = _mm256_set1_pd(1.0);
  __m256d expo = _mm256_setzero_pd();

  inline void push(__m256d z) {
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
    const __m256i magic_i = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d magic_d = _mm256_set1_pd(4503599627370496.0);  // 2^52
    const __m256d bias = _mm256_set1_pd(1023.0);

    const __m256d p = _mm256_mul_pd(mant, z);
    const __m256i bits = _mm256_castpd_si256(p);
    const __m256i e = _mm256_srli_epi64(bits, 52);
    const __m256d ed = _mm256_sub_pd(
        _mm256_castsi256_pd(_mm256_or_si256(e, magic_i)), magic_d);
    expo = _mm256_add_pd(expo, _mm256_sub_pd(ed, bias));
    mant = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  }

  double finish() const {
    alignas(32) double m[4];
    alignas(32) double x[4];
    _mm256_store_pd(m, mant);
    _mm256_store_pd(x, expo);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::log(m[i]) + x[i] * 0.69314718055994530942;
    return s;
  }
};

}  // namespace

void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out) {
  if (cluster < 4) {
    scalar::block_minima(in, cluster, out);
    return;
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double* p = in.data() + b * cluster;
    __m256d m = _mm256_loadu_pd(p);
    std::size_t i = 4;
    for (; i + 4 <= cluster; i += 4) m = _mm256_min_pd(m, _mm256_loadu_pd(p + i));
    double r = hmin(m);
    for (; i < cluster; ++i) r = std::min(r, p[i]);
    out[b] = r;
  }
}

std::size_t count_less(std::span<const double> v, double threshold) {
  const __m256d t = _mm256_set1_pd(threshold);
  const std::size_t n = v.size();
  const double* p = v.data();
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(p + i), t, _CMP_LT_OQ);
    c += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(lt)));
  }
  for (; i < n; ++i) c += p[i] < threshold ? 1 : 0;
  return c;
}

double sum(std::span<const double> v) {
  const std::size_t n = v.size();
  const double* p = v.data();
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(p + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(p + i + 4));
  }
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += p[i];
  return s;
}

Moments2 moments2(std::span<const double> x, std::span<const double> y) {
  Moments2 m;
  const std::size_t n = x.size();
  if (n == 0) return m;
  m.mean_x = sum(x) / static_cast<double>(n);
  m.mean_y = sum(y) / static_cast<double>(n);
  const __m256d mx = _mm256_set1_pd(m.mean_x);
  const __m256d my = _mm256_set1_pd(m.mean_y);
  __m256d sxx = _mm256_setzero_pd();
  __m256d syy = _mm256_setzero_pd();
  __m256d sxy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), mx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y.data() + i), my);
    sxx = _mm256_fmadd_pd(dx, dx, sxx);
    syy = _mm256_fmadd_pd(dy, dy, syy);
    sxy = _mm256_fmadd_pd(dx, dy, sxy);
  }
  m.sxx = hsum(sxx);
  m.syy = hsum(syy);
  m.sxy = hsum(sxy);
  for (; i < n; ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

void power_sums(std::span<const double> e, std::span<double> out) {
  constexpr std::size_t kMax = 16;
  const std::size_t order = out.size();
  if (order == 0) return;
  if (order > kMax) {
    scalar::power_sums(e, out);
    return;
  }
  __m256d acc[kMax];
  for (std::size_t k = 0; k < order; ++k) acc[k] = _mm256_setzero_pd();
  const std::size_t n = e.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(e.data() + i);
    __m256d p = v;
    for (std::size_t k = 0; k < order; ++k) {
      acc[k] = _mm256_add_pd(acc[k], p);
      p = _mm256_mul_pd(p, v);
    }
  }
  for (std::size_t k = 0; k < order; ++k) out[k] = hsum(acc[k]);
  for (; i < n; ++i) {
    double p = e[i];
    for (std::size_t k = 0; k < order; ++k) {
      out[k] += p;
      p *= e[i];
    }
  }
}

LogTerms gpd_log_terms(std::span<const double> e, double c) {
  const std::size_t n = e.size();
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d zmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  LogAccumulator a0, a1;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d z0 = _mm256_add_pd(one, _mm256_mul_pd(cv, _mm256_loadu_pd(e.data() + i)));
    const __m256d z1 = _mm256_add_pd(one, _mm256_mul_pd(cv, _mm256_loadu_pd(e.data() + i + 4)));
    zmin = _mm256_min_pd(zmin, _mm256_min_pd(z0, z1));
    a0.push(z0);
    a1.push(z1);
  }
  LogTerms t;
  t.min_z = hmin(zmin);
  // Non-positive or subnormal z would corrupt the exponent bookkeeping.
  if (!(t.min_z >= std::numeric_limits<double>::min())) return scalar::gpd_log_terms(e, c);
  t.log_sum = a0.finish() + a1.finish();
  for (; i < n; ++i) {
    const double cvv = c * e[i];
    t.min_z = std::min(t.min_z, 1.0 + cvv);
    t.log_sum += std::log1p(cvv);
  }
  return t;
}

GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape) {
  const std::size_t n = e.size();
  const __m256d inv = _mm256_set1_pd(inv_scale);
  const __m256d k = _mm256_set1_pd(shape);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d zmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d ratio = _mm256_setzero_pd();
  __m256d ratio2 = _mm256_setzero_pd();
  __m256d cross = _mm256_setzero_pd();
  LogAccumulator acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y = _mm256_mul_pd(_mm256_loadu_pd(e.data() + i), inv);
    const __m256d z = _mm256_add_pd(one, _mm256_mul_pd(k, y));  // same rounding as scalar
    zmin = _mm256_min_pd(zmin, z);
    acc.push(z);
    const __m256d r = _mm256_div_pd(one, z);
    const __m256d yr = _mm256_mul_pd(y, r);
    ratio = _mm256_add_pd(ratio, yr);
    cross = _mm256_fmadd_pd(yr, r, cross);
    ratio2 = _mm256_fmadd_pd(yr, yr, ratio2);
  }
  GpdTerms t;
  t.min_z = hmin(zmin);
  if (!(t.min_z >= std::numeric_limits<double>::min()))
    return scalar::gpd_terms(e, inv_scale, shape);
  t.log_sum = acc.finish();
  t.ratio_sum = hsum(ratio);
  t.cross_sum = hsum(cross);
  t.ratio2_sum = hsum(ratio2);
  for (; i < n; ++i) {
    const double y = e[i] * inv_scale;
    const double sy = shape * y;
    const double z = 1.0 + sy;
    t.min_z = std::min(t.min_z, z);
    t.log_sum += std::log1p(sy);
    const double r = 1.0 / z;
    const double yr = y * r;
    t.ratio_sum += yr;
    t.cross_sum += yr * r;
    t.ratio2_sum += yr * yr;
  }
  return t;
}

void pickands(std::span<const double> xt, std::span<const double> yt, double n,
              std::span<double> r, std::span<double> omega) {
  const std::size_t m = xt.size();
  const __m256d nn = _mm256_set1_pd(n);
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d ax = _mm256_xor_pd(_mm256_div_pd(_mm256_loadu_pd(xt.data() + i), nn), sign);
    const __m256d ay = _mm256_xor_pd(_mm256_div_pd(_mm256_loadu_pd(yt.data() + i), nn), sign);
    const __m256d rr = _mm256_add_pd(ax, ay);
    _mm256_storeu_pd(r.data() + i, rr);
    _mm256_storeu_pd(omega.data() + i, _mm256_div_pd(ax, rr));
  }
  for (; i < m; ++i) {
    const double ax = -xt[i] / n;
    const double ay = -yt[i] / n;
    r[i] = ax + ay;
    omega[i] = ax / r[i];
  }
}

}  // namespace mevt::simd::avx2
