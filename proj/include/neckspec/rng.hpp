#pragma once

#include <cstdint>

namespace neckspec {

// splitmix64: state += 0x9E3779B97F4A7C15, then two xor-shift-multiply rounds
// (0xBF58476D1CE4E5B9, 0x94D049BB133111EB). uniform() uses the top 53 bits.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
  std::uint64_t state_;
};

}  // namespace neckspec
