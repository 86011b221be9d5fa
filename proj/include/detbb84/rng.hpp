#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace detbb84 {

// splitmix64 step; advances state and returns the next word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed. Streams with
// distinct ids never share state with each other or with the master.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  std::uint64_t state = master ^ (0xd1342543de82ef95ull * (stream_id + 1));
  splitmix64(state);
  return splitmix64(state);
}

// xoshiro256** with a splitmix64-filled state. Hand-rolled so that replay
// is byte-identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  int bit() { return static_cast<int>(next() >> 63); }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::domain_error("Rng::below: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Poisson sampling, Knuth's product method, chunked so exp(-mu) never
// underflows. Intended for the small means of weak-pulse sources.
inline int sample_poisson(double mu, Rng& rng) {
  if (mu < 0.0) throw std::domain_error("sample_poisson: mean must be >= 0");
  int total = 0;
  while (mu > 32.0) {  // Poisson additivity
    total += sample_poisson(32.0, rng);
    mu -= 32.0;
  }
  if (mu == 0.0) return total;
  const double limit = std::exp(-mu);
  double product = 1.0;
  int count = -1;
  do {
    ++count;
    product *= rng.uniform01();
  } while (product > limit);
  return total + count;
}

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[rng.below(i)]);
  }
}

// k distinct indices from [0, n), ascending. Partial Fisher-Yates.
inline std::vector<std::int64_t> sample_without_replacement(std::int64_t n,
                                                            std::int64_t k,
                                                            Rng& rng) {
  if (k < 0 || k > n) {
    throw std::domain_error("sample_without_replacement: k out of range");
  }
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), std::int64_t{0});
  for (std::int64_t i = 0; i < k; ++i) {
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(
                  i + static_cast<std::int64_t>(rng.below(
                          static_cast<std::uint64_t>(n - i))))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detbb84
