#pragma once

#include <cstdint>
#include <string_view>

namespace sfcmig {

// Deterministic generator (splitmix64). Self-contained so streams are
// bit-identical across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  int uniform_int(int n);

 private:
  std::uint64_t state_;
};

// Stable per-component seed from one master seed, so traffic, weight
// initialization, and exploration draw from independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);

}  // namespace sfcmig
