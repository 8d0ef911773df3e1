#include "mevt/rng.hpp"

#include <cmath>

#include "mevt/specfun.hpp"

namespace mevt {
namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  u128 m = static_cast<u128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t floor = (0 - n) % n;
    while (low < floor) {
      m = static_cast<u128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() { return norm_inv_cdf(uniform_open()); }

double Rng::exponential() { return -std::log(uniform_open()); }

}  // namespace mevt
