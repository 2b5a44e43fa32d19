#pragma once

#include <cstdint>
#include <random>

namespace wavefuse {

// Seeded generator for weight init and synthetic data. Floats are derived from
// the raw 64-bit engine output so sequences are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 24 bits of precision.
  float uniform() {
    return static_cast<float>(engine_() >> 40) * (1.0f / 16777216.0f);
  }
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wavefuse
