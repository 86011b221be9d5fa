#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "detbb84/postprocess.hpp"
#include "detbb84/rng.hpp"

using namespace detbb84;

namespace {

std::vector<std::uint8_t> random_key(std::int64_t n, Rng& rng) {
  std::vector<std::uint8_t> key(static_cast<std::size_t>(n));
  for (auto& b : key) b = static_cast<std::uint8_t>(rng.bit());
  return key;
}

// Flips each bit independently; returns the number of flips.
std::int64_t corrupt(std::vector<std::uint8_t>& key, double p, Rng& rng) {
  std::int64_t flips = 0;
  for (auto& b : key) {
    if (rng.bernoulli(p)) {
      b ^= 1;
      ++flips;
    }
  }
  return flips;
}

std::int64_t disagreements(const std::vector<std::uint8_t>& a,
                           const std::vector<std::uint8_t>& b) {
  std::int64_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] ^ b[i];
  return d;
}

}  // namespace

TEST_CASE("binary entropy endpoints and frozen midpoints") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.11) ==
        Catch::Approx(0.499915958164528).epsilon(1e-12));
  CHECK(binary_entropy(0.03) ==
        Catch::Approx(0.19439185783157616).epsilon(1e-12));
  CHECK(binary_entropy(0.3) == Catch::Approx(binary_entropy(0.7)).epsilon(1e-15));
  CHECK_THROWS_AS(binary_entropy(-0.01), std::domain_error);
  CHECK_THROWS_AS(binary_entropy(1.01), std::domain_error);
}

TEST_CASE("privacy-amplification fraction endpoints and frozen midpoints") {
  CHECK(tau_fraction(0.0) == 0.0);
  CHECK(tau_fraction(0.5) == 1.0);
  CHECK(tau_fraction(0.1) ==
        Catch::Approx(0.44360665147561471).epsilon(1e-12));
  CHECK(tau_fraction(1.0 / 30.0) ==
        Catch::Approx(0.17490349555512879).epsilon(1e-12));
  CHECK(tau_fraction(0.75) == 1.0);  // beyond one half: sacrifice everything
  CHECK_THROWS_AS(tau_fraction(-0.01), std::domain_error);
}

TEST_CASE("final key length reproduces the frozen worked example") {
  // floor(1000 * (0.9 (1 - tau(1/30)) - h(0.03))) = floor(548.194...)
  const KeyLengthResult r = final_key_length(1000, 0.03, 0.9, 1.0);
  CHECK(r.length == 548);
  CHECK_FALSE(r.margin_exhausted);
}

TEST_CASE("final key length collapses outside the secure margin") {
  const KeyLengthResult insecure = final_key_length(1000, 0.03, 0.0, 1.0);
  CHECK(insecure.length == 0);
  CHECK(insecure.margin_exhausted);

  const KeyLengthResult exceeded = final_key_length(1000, 0.4, 0.3, 1.0);
  CHECK(exceeded.length == 0);
  CHECK(exceeded.margin_exhausted);

  // High error but inside the margin: the gain goes nonpositive without
  // exhausting the multiphoton margin.
  const KeyLengthResult zero = final_key_length(1000, 0.3, 0.95, 1.0);
  CHECK(zero.length == 0);
  CHECK_FALSE(zero.margin_exhausted);

  const KeyLengthResult perfect = final_key_length(1000, 0.0, 1.0, 1.0);
  CHECK(perfect.length == 1000);
}

TEST_CASE("final key length is monotone in the error rate") {
  std::int64_t previous = 1 << 20;
  for (int i = 1; i <= 10; ++i) {
    const double e = 0.01 * i;
    const KeyLengthResult r = final_key_length(100000, e, 0.95, 1.0);
    CHECK(r.length <= previous);
    previous = r.length;
  }
}

TEST_CASE("identical keys leak exactly one parity per pass") {
  Rng rng(31);
  const auto key = random_key(512, rng);
  const CorrectionResult r = error_correct(key, key, 0.0, rng);
  CHECK(r.corrected == key);
  CHECK(r.leaked_bits == 4);
}

TEST_CASE("a single flipped bit is located and corrected") {
  Rng rng(32);
  const auto key_a = random_key(256, rng);
  for (const std::size_t position : {std::size_t{0}, std::size_t{100},
                                     std::size_t{255}}) {
    auto key_b = key_a;
    key_b[position] ^= 1;
    const CorrectionResult r = error_correct(key_a, key_b, 0.02, rng);
    CHECK(r.corrected == key_a);
    CHECK(r.leaked_bits > 4);
  }
}

TEST_CASE("correction converges at the design error rate") {
  Rng rng(33);
  std::int64_t residual = 0;
  std::int64_t total = 0;
  std::int64_t leaked = 0;
  const int trials = 100;
  const std::int64_t n = 2000;
  for (int trial = 0; trial < trials; ++trial) {
    const auto key_a = random_key(n, rng);
    auto key_b = key_a;
    corrupt(key_b, 0.05, rng);
    const CorrectionResult r = error_correct(key_a, key_b, 0.05, rng);
    residual += disagreements(key_a, r.corrected);
    total += n;
    leaked += r.leaked_bits;
  }
  CHECK(static_cast<double>(residual) / static_cast<double>(total) <= 1e-3);
  // Disclosed parities cannot beat the Shannon bound n h(e) on average.
  const double mean_leak_rate =
      static_cast<double>(leaked) / static_cast<double>(total);
  CHECK(mean_leak_rate >= binary_entropy(0.05));
  CHECK(mean_leak_rate < 1.0);
}

TEST_CASE("correction tolerates a zero error estimate") {
  Rng rng(34);
  const auto key_a = random_key(128, rng);
  auto key_b = key_a;
  key_b[77] ^= 1;
  // Block sizing degenerates to whole-key parities; the bisection still
  // walks down to the flipped bit.
  const CorrectionResult r = error_correct(key_a, key_b, 0.0, rng);
  CHECK(r.corrected == key_a);
}

TEST_CASE("correction rejects mismatched lengths") {
  Rng rng(35);
  const auto key_a = random_key(16, rng);
  const auto key_b = random_key(17, rng);
  CHECK_THROWS_AS(error_correct(key_a, key_b, 0.05, rng),
                  std::invalid_argument);
}

TEST_CASE("hashing is deterministic in key and seed") {
  Rng rng(36);
  const auto key = random_key(300, rng);
  const auto once = privacy_amplify(key, 150, 42);
  const auto twice = privacy_amplify(key, 150, 42);
  CHECK(once == twice);
  REQUIRE(once.size() == 150);
  const auto other_seed = privacy_amplify(key, 150, 43);
  CHECK(once != other_seed);
  auto tweaked = key;
  tweaked[5] ^= 1;
  CHECK(privacy_amplify(tweaked, 150, 42) != once);
}

TEST_CASE("hashing is linear over GF(2)") {
  Rng rng(37);
  const std::int64_t n = 300;
  const std::int64_t m = 150;
  const std::uint64_t seed = 99;
  const auto a = random_key(n, rng);
  const auto b = random_key(n, rng);
  std::vector<std::uint8_t> a_xor_b(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < a.size(); ++i) a_xor_b[i] = a[i] ^ b[i];
  const auto ha = privacy_amplify(a, m, seed);
  const auto hb = privacy_amplify(b, m, seed);
  const auto hx = privacy_amplify(a_xor_b, m, seed);
  for (std::size_t j = 0; j < hx.size(); ++j) {
    CHECK(hx[j] == (ha[j] ^ hb[j]));
  }
}

TEST_CASE("flipping one input bit flips about half the output") {
  Rng rng(38);
  const std::int64_t n = 256;
  const std::int64_t m = 128;
  double mean = 0.0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const auto key = random_key(n, rng);
    auto tweaked = key;
    tweaked[static_cast<std::size_t>(rng.below(n))] ^= 1;
    const std::uint64_t seed = rng.next();
    const auto h1 = privacy_amplify(key, m, seed);
    const auto h2 = privacy_amplify(tweaked, m, seed);
    mean += static_cast<double>(disagreements(h1, h2)) /
            static_cast<double>(m);
  }
  mean /= trials;
  CHECK(mean > 0.45);
  CHECK(mean < 0.55);
}

TEST_CASE("hash output length is bounded by the input") {
  Rng rng(39);
  const auto key = random_key(64, rng);
  CHECK(privacy_amplify(key, 0, 1).empty());
  CHECK(privacy_amplify(key, 64, 1).size() == 64);
  CHECK_THROWS_AS(privacy_amplify(key, 65, 1), std::invalid_argument);
  CHECK_THROWS_AS(privacy_amplify(key, -1, 1), std::invalid_argument);
}

TEST_CASE("word boundary lengths hash consistently") {
  Rng rng(40);
  for (const std::int64_t n : {std::int64_t{63}, std::int64_t{64},
                               std::int64_t{65}, std::int64_t{128},
                               std::int64_t{129}}) {
    const auto key = random_key(n, rng);
    const auto h = privacy_amplify(key, n / 2, 7);
    CHECK(static_cast<std::int64_t>(h.size()) == n / 2);
    // Oracle: direct bit-level Toeplitz evaluation T[j][i] = d[j - i + n - 1]
    Rng bits(7);
    const std::int64_t diag_bits = n + n / 2 - 1;
    std::vector<std::uint8_t> d;
    d.reserve(static_cast<std::size_t>(diag_bits));
    std::uint64_t word = 0;
    for (std::int64_t k = 0; k < diag_bits; ++k) {
      if (k % 64 == 0) word = bits.next();
      d.push_back(static_cast<std::uint8_t>((word >> (k % 64)) & 1));
    }
    for (std::int64_t j = 0; j < n / 2; ++j) {
      std::uint8_t parity = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        parity ^= static_cast<std::uint8_t>(
            key[static_cast<std::size_t>(i)] &
            d[static_cast<std::size_t>(j - i + n - 1)]);
      }
      REQUIRE(h[static_cast<std::size_t>(j)] == parity);
    }
  }
}
