#pragma once

#include <cstdint>
#include <random>

namespace obbkit {

// Seeded generator with hand-rolled distributions. std::mt19937_64 output
// is pinned by the standard but the std distributions are not, so the
// uniform draws are derived here directly to keep runs reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * unit(); }

  // Uniform integer in [0, n). Modulo bias is negligible for the small
  // ranges used here.
  std::uint64_t index(std::uint64_t n) { return n ? eng_() % n : 0; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace obbkit
