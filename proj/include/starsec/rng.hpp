#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "starsec/common.hpp"

namespace starsec {

// Counter-style substream derivation: a root seed plus a list of stream
// labels is mixed into an independent 64-bit state. Trials and sweep points
// get their own substreams, so results do not depend on evaluation order or
// worker count.
std::uint64_t mix_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> labels);

// Deterministic generator. All distributions are implemented here (instead
// of std::*_distribution) so that byte-identical output is guaranteed across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> labels)
      : engine_(mix_stream(seed, labels)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; second sample of each pair is cached.
  double normal();

  // Circularly-symmetric complex Gaussian with E|x|^2 = 1.
  Complex cnormal() {
    const double scale = 0.7071067811865476;  // 1/sqrt(2)
    return Complex(scale * normal(), scale * normal());
  }

  CVec cnormal_vector(int n);
  CMat cnormal_matrix(int rows, int cols);

 private:
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace starsec
