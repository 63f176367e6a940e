#include "fseval/rng.hpp"

#include <cassert>

namespace fseval {

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::string_view> tags) {
  std::uint64_t h = master;
  for (std::string_view tag : tags) h = splitmix64(h ^ fnv1a64(tag));
  return h;
}

std::uint64_t derive_seed(std::uint64_t master,
                          const std::vector<std::string>& tags) {
  std::uint64_t h = master;
  for (const std::string& tag : tags) h = splitmix64(h ^ fnv1a64(tag));
  return h;
}

int Rng::next_below(int n) {
  assert(n > 0);
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % un);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<int>(x % un);
}

void Rng::shuffle(std::vector<int>& v) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    const int j = next_below(i + 1);
    std::swap(v[i], v[j]);
  }
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  assert(k >= 0 && k <= n);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::vector<int> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int j = i + next_below(n - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace fseval
