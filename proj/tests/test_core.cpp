#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "detbb84/core.hpp"
#include "detbb84/rng.hpp"

using namespace detbb84;

TEST_CASE("state labels enumerate the four encodings") {
  CHECK(state_label(0, Basis::Z) == StateLabel::Zero);
  CHECK(state_label(1, Basis::Z) == StateLabel::One);
  CHECK(state_label(0, Basis::X) == StateLabel::Plus);
  CHECK(state_label(1, Basis::X) == StateLabel::Minus);
  CHECK(basis_char(Basis::Z) == 'Z');
  CHECK(basis_char(Basis::X) == 'X');
}

TEST_CASE("encode and decode invert each other in the matched basis") {
  for (const Basis basis : {Basis::Z, Basis::X}) {
    for (const std::uint8_t bit : {0, 1}) {
      const QubitSignal s = encode(bit, basis);
      CHECK(s.encoded_bit == bit);
      CHECK(s.encoded_basis == basis);
      CHECK(s.photon_count == 1);
      CHECK(decode(s, basis) == bit);
    }
  }
}

TEST_CASE("decode rejects a conjugate-basis readout") {
  const QubitSignal s = encode(1, Basis::Z);
  CHECK_THROWS_AS(decode(s, Basis::X), std::domain_error);
}

TEST_CASE("matched-basis measurement is deterministic") {
  Rng rng(11);
  for (const Basis basis : {Basis::Z, Basis::X}) {
    for (const std::uint8_t bit : {0, 1}) {
      const QubitSignal s = encode(bit, basis);
      for (int rep = 0; rep < 32; ++rep) {
        CHECK(measure(s, basis, rng) == bit);
      }
    }
  }
}

TEST_CASE("conjugate-basis measurement is a fair coin") {
  Rng rng(12);
  const QubitSignal s = encode(0, Basis::Z);
  const int trials = 100000;
  int ones = 0;
  for (int i = 0; i < trials; ++i) ones += measure(s, Basis::X, rng);
  // 3 sigma of a fair binomial at 1e5 trials
  const double freq = static_cast<double>(ones) / trials;
  CHECK(freq > 0.4950);
  CHECK(freq < 0.5050);
}

TEST_CASE("single-photon source always emits one photon") {
  Rng rng(13);
  SourceModel source;
  source.statistics = SourceStatistics::SinglePhoton;
  source.mu = 0.1;
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_photon_number(source, rng) == 1);
  }
  CHECK(multiphoton_probability(source) == 0.0);
}

TEST_CASE("poisson photon statistics match their moments") {
  Rng rng(14);
  SourceModel source;
  source.mu = 2.5;
  const int trials = 200000;
  std::int64_t total = 0;
  std::int64_t multi = 0;
  for (int i = 0; i < trials; ++i) {
    const int k = sample_photon_number(source, rng);
    total += k;
    multi += k >= 2;
  }
  const double mean = static_cast<double>(total) / trials;
  // 4 sigma of the sample mean, sigma = sqrt(mu/trials)
  CHECK(std::abs(mean - 2.5) < 4.0 * std::sqrt(2.5 / trials));
  const double s_m = multiphoton_probability(SourceStatistics::Poisson, 2.5);
  const double frac = static_cast<double>(multi) / trials;
  CHECK(std::abs(frac - s_m) <
        4.0 * std::sqrt(s_m * (1.0 - s_m) / trials));
}

TEST_CASE("multiphoton fraction has a frozen reference value") {
  // 1 - e^{-mu}(1 + mu) at mu = 0.1, high-precision evaluation
  const double s_m = multiphoton_probability(SourceStatistics::Poisson, 0.1);
  CHECK(s_m == Catch::Approx(0.0046788401604444695).epsilon(1e-12));
  CHECK(std::exp(-0.1) == Catch::Approx(0.90483741803595957).epsilon(1e-15));
  CHECK_THROWS_AS(multiphoton_probability(SourceStatistics::Poisson, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(multiphoton_probability(SourceStatistics::Poisson, -1.0),
                  std::domain_error);
}

TEST_CASE("vacuum pulses never yield a photon") {
  Rng rng(15);
  SourceModel source;
  source.mu = 1e-9;
  int nonzero = 0;
  for (int i = 0; i < 10000; ++i) nonzero += sample_photon_number(source, rng) > 0;
  CHECK(nonzero <= 1);  // expectation 1e-5
}

TEST_CASE("rng streams replay and derive independently") {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 64; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(99, 0) != derive_seed(99, 1));
  Rng c(derive_seed(99, 0));
  Rng d(derive_seed(99, 1));
  CHECK(c.next() != d.next());
}

TEST_CASE("uniform01 lies in the half-open unit interval") {
  Rng rng(7);
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(lo < 0.001);
  CHECK(hi > 0.999);
}

TEST_CASE("bernoulli short-circuits degenerate probabilities") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    CHECK(rng.bernoulli(0.0) == false);
    CHECK(rng.bernoulli(1.0) == true);
  }
}

TEST_CASE("sampling without replacement is sorted, unique, in range") {
  Rng rng(9);
  const auto picks = sample_without_replacement(1000, 100, rng);
  REQUIRE(picks.size() == 100);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    CHECK(picks[i] >= 0);
    CHECK(picks[i] < 1000);
    if (i > 0) CHECK(picks[i] > picks[i - 1]);
  }
  const auto all = sample_without_replacement(50, 50, rng);
  REQUIRE(all.size() == 50);
  CHECK(all.front() == 0);
  CHECK(all.back() == 49);
}
