#include "sfcmig/rng.hpp"

#include "sfcmig/error.hpp"

namespace sfcmig {

int Rng::uniform_int(int n) {
  if (n <= 0) throw Error("rng", "uniform_int needs a positive bound");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  while (true) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low >= bound || low >= (-bound) % bound) {
      return static_cast<int>(m >> 64);
    }
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view component) {
  // FNV-1a over the component name, mixed into the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  Rng mix(master ^ h);
  return mix.next_u64();
}

}  // namespace sfcmig
