#pragma once

#include <cstdint>
#include <random>

namespace ppdiag {

// Seedable generator with a pinned algorithm (64-bit Mersenne Twister) and
// hand-rolled uniform/normal transforms, so streams match across platforms
// and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal by the Box-Muller transform; the second variate of each
  // pair is cached.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ppdiag
