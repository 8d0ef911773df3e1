// Scalar reference kernels. These define the semantics every vector
// variant is tested against.

#include <algorithm>
#include <cmath>
#include <limits>

#include "mevt/simd.hpp"

namespace mevt::simd::scalar {

void block_minima(std::span<const double> in, std::size_t cluster,
                  std::span<double> out) {
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double* p = in.data() + b * cluster;
    double m = p[0];
    for (std::size_t i = 1; i < cluster; ++i) m = std::min(m, p[i]);
    out[b] = m;
  }
}

std::size_t count_less(std::span<const double> v, double threshold) {
  std::size_t c = 0;
  for (double x : v) c += x < threshold ? 1 : 0;
  return c;
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

Moments2 moments2(std::span<const double> x, std::span<const double> y) {
  Moments2 m;
  const std::size_t n = x.size();
  if (n == 0) return m;
  m.mean_x = sum(x) / static_cast<double>(n);
  m.mean_y = sum(y) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  return m;
}

void power_sums(std::span<const double> e, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (double v : e) {
    double p = v;
    for (double& o : out) {
      o += p;
      p *= v;
    }
  }
}

LogTerms gpd_log_terms(std::span<const double> e, double c) {
  LogTerms t;
  t.min_z = std::numeric_limits<double>::infinity();
  for (double v : e) {
    const double cv = c * v;
    const double z = 1.0 + cv;
    t.min_z = std::min(t.min_z, z);
    t.log_sum += std::log1p(cv);
  }
  return t;
}

GpdTerms gpd_terms(std::span<const double> e, double inv_scale, double shape) {
  GpdTerms t;
  t.min_z = std::numeric_limits<double>::infinity();
  for (double v : e) {
    const double y = v * inv_scale;
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
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const double ax = -xt[i] / n;
    const double ay = -yt[i] / n;
    r[i] = ax + ay;
    omega[i] = ax / r[i];
  }
}

}  // namespace mevt::simd::scalar
