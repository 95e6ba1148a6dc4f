#include "starsec/rng.hpp"

#include <cmath>

namespace starsec {

namespace {

// splitmix64 finalizer; good avalanche for label mixing.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t state = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t label : labels) {
    state = splitmix64(state ^ splitmix64(label));
  }
  return state;
}

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  // Box-Muller on (0,1] to avoid log(0).
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * kPi * u2;
  cached_ = r * std::sin(a);
  have_cached_ = true;
  return r * std::cos(a);
}

CVec Rng::cnormal_vector(int n) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cnormal();
  return v;
}

CMat Rng::cnormal_matrix(int rows, int cols) {
  CMat m(rows, cols);
  // Row-major fill order is part of the determinism contract.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = cnormal();
  return m;
}

}  // namespace starsec
