#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace fseval {

// All randomness in the library flows through the generators below. They are
// specified down to the bit so that run logs replay identically across
// platforms and standard-library versions (std::shuffle and the std
// distributions make no such guarantee).

// splitmix64, Vigna 2015. Full 64-bit avalanche, used both as a mixer for
// seed derivation and as the stream function of Rng.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the bytes of a tag string.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed derivation: h := master, then for each tag in order
// h := splitmix64(h xor fnv1a64(tag)). Every seed used anywhere in a run is
// derived from the master seed and an ordered tag list, never from execution
// order, which is what makes parallel runs bit-identical to serial ones.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::string_view> tags);
std::uint64_t derive_seed(std::uint64_t master,
                          const std::vector<std::string>& tags);

// Deterministic PRNG: a splitmix64 counter stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_++); }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased via rejection.
  int next_below(int n);

  // Standard normal via Box-Muller (no caching so draw count stays fixed).
  double next_gaussian() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates.
  void shuffle(std::vector<int>& v);

  // k distinct values from {0..n-1} via partial Fisher-Yates, in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::uint64_t state_;
};

}  // namespace fseval
