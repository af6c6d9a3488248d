#pragma once

#include <cstdint>
#include <random>

namespace veloreg {

// Seeded uniform generator. Draws are produced directly from the mt19937_64
// word stream instead of std::uniform_real_distribution, whose output is
// implementation-defined; this keeps seeded artifacts bit-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace veloreg
