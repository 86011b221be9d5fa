#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "detbb84/rng.hpp"

namespace detbb84 {

// Shannon binary entropy, h(0) = h(1) = 0 by continuity.
inline double binary_entropy(double e) {
  if (e < 0.0 || e > 1.0) {
    throw std::domain_error("binary_entropy: argument outside [0,1]");
  }
  if (e == 0.0 || e == 1.0) return 0.0;
  return -e * std::log2(e) - (1.0 - e) * std::log2(1.0 - e);
}

// Fraction of the corrected key sacrificed in privacy amplification:
// log2(1 + 4e - 4e^2) on [0, 1/2], exactly 1 above (continuous at 1/2).
inline double tau_fraction(double e) {
  if (e < 0.0 || e > 1.0) {
    throw std::domain_error("tau_fraction: argument outside [0,1]");
  }
  if (e > 0.5) return 1.0;
  return std::log2(1.0 + 4.0 * e - 4.0 * e * e);
}

struct KeyLengthResult {
  std::int64_t length = 0;
  bool margin_exhausted = false;  // e > beta or beta <= 0: must abort
};

// floor(n * max(0, beta (1 - tau(e/beta)) - f_casc h(e))). When the error
// rate exceeds beta the tau argument leaves its domain: the multiphoton
// fraction overwhelms the errors attributable to single photons and the
// session must abort loudly rather than clamp.
inline KeyLengthResult final_key_length(std::int64_t n, double e,
                                        double beta_value, double f_casc) {
  if (n < 0) throw std::domain_error("final_key_length: n must be >= 0");
  if (e < 0.0 || e > 1.0) {
    throw std::domain_error("final_key_length: e outside [0,1]");
  }
  if (beta_value <= 0.0 || e > beta_value) return {0, true};
  const double gain = beta_value * (1.0 - tau_fraction(e / beta_value)) -
                      f_casc * binary_entropy(e);
  if (gain <= 0.0) return {0, false};
  return {static_cast<std::int64_t>(
              std::floor(static_cast<double>(n) * gain)),
          false};
}

struct CorrectionResult {
  std::vector<std::uint8_t> corrected;  // key_b with located errors flipped
  std::int64_t leaked_bits = 0;         // every disclosed parity
};

// Iterative shuffled-block parity reconciliation (Cascade-style). Four
// passes; the initial block is ~0.73/e, doubling each pass. A block with odd
// parity difference is bisected to one erroneous bit; every flip toggles the
// parity of its containing block in every other pass, and any block driven
// odd is re-bisected until all passes agree. qber_estimate sizes the blocks
// only; at zero it degenerates to whole-key parities.
inline CorrectionResult error_correct(const std::vector<std::uint8_t>& key_a,
                                      std::vector<std::uint8_t> key_b,
                                      double qber_estimate, Rng& rng) {
  if (key_a.size() != key_b.size()) {
    throw std::invalid_argument("error_correct: keys must have equal length");
  }
  const std::int64_t n = static_cast<std::int64_t>(key_a.size());
  CorrectionResult result;
  if (n == 0) {
    result.corrected = std::move(key_b);
    return result;
  }

  constexpr int kPasses = 4;
  std::int64_t block1 = n;
  if (qber_estimate > 0.0) {
    block1 = std::clamp(
        static_cast<std::int64_t>(std::ceil(0.73 / qber_estimate)),
        std::int64_t{1}, n);
  }

  std::vector<std::vector<std::int64_t>> perm(kPasses);
  std::vector<std::vector<std::int64_t>> pos_of(kPasses);
  std::vector<std::int64_t> bsize(kPasses);
  std::vector<std::vector<std::uint8_t>> odd(kPasses);
  std::set<std::pair<int, std::int64_t>> odd_blocks;

  // Parity of a^b over positions [lo, hi) of pass p's ordering.
  const auto diff_parity = [&](int p, std::int64_t lo, std::int64_t hi) {
    int parity = 0;
    for (std::int64_t pos = lo; pos < hi; ++pos) {
      const std::int64_t raw = perm[p][static_cast<std::size_t>(pos)];
      parity ^= key_a[static_cast<std::size_t>(raw)] ^
                key_b[static_cast<std::size_t>(raw)];
    }
    return parity;
  };
  const auto block_range = [&](int p, std::int64_t block) {
    const std::int64_t lo = block * bsize[p];
    return std::pair<std::int64_t, std::int64_t>{
        lo, std::min(n, lo + bsize[p])};
  };

  for (int pass = 0; pass < kPasses; ++pass) {
    perm[pass].resize(static_cast<std::size_t>(n));
    std::iota(perm[pass].begin(), perm[pass].end(), std::int64_t{0});
    if (pass > 0) shuffle(perm[pass], rng);
    pos_of[pass].resize(static_cast<std::size_t>(n));
    for (std::int64_t pos = 0; pos < n; ++pos) {
      pos_of[pass][static_cast<std::size_t>(
          perm[pass][static_cast<std::size_t>(pos)])] = pos;
    }
    bsize[pass] = std::min(n, block1 << pass);
    const std::int64_t nblocks = (n + bsize[pass] - 1) / bsize[pass];
    odd[pass].assign(static_cast<std::size_t>(nblocks), 0);

    for (std::int64_t block = 0; block < nblocks; ++block) {
      const auto [lo, hi] = block_range(pass, block);
      result.leaked_bits += 1;  // top-level parity disclosure
      if (diff_parity(pass, lo, hi)) {
        odd[pass][static_cast<std::size_t>(block)] = 1;
        odd_blocks.emplace(pass, block);
      }
    }

    while (!odd_blocks.empty()) {
      const auto [p, block] = *odd_blocks.begin();
      odd_blocks.erase(odd_blocks.begin());
      if (!odd[p][static_cast<std::size_t>(block)]) continue;
      auto [lo, hi] = block_range(p, block);
      // Odd parity difference guarantees at least one disagreeing bit;
      // bisection discloses one sub-parity per halving.
      while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        result.leaked_bits += 1;
        if (diff_parity(p, lo, mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const std::int64_t raw = perm[p][static_cast<std::size_t>(lo)];
      key_b[static_cast<std::size_t>(raw)] ^= 1;
      // The flip toggles the parity of its block in every built pass; both
      // parties know this without further disclosure.
      for (int q = 0; q <= pass; ++q) {
        const std::int64_t qblock =
            pos_of[q][static_cast<std::size_t>(raw)] / bsize[q];
        auto& flag = odd[q][static_cast<std::size_t>(qblock)];
        flag ^= 1;
        if (flag) {
          odd_blocks.emplace(q, qblock);
        } else {
          odd_blocks.erase({q, qblock});
        }
      }
    }
  }

  result.corrected = std::move(key_b);
  return result;
}

// Seeded Toeplitz universal-hash compression over GF(2). Output bit j is
// the inner product of the key with diagonal window d[j .. j+n-1] reversed,
// i.e. T[j][i] = d[j - i + n - 1]. Word-packed so the cost is n*m/64.
inline std::vector<std::uint8_t> privacy_amplify(
    const std::vector<std::uint8_t>& key, std::int64_t final_length,
    std::uint64_t seed) {
  const std::int64_t n = static_cast<std::int64_t>(key.size());
  if (final_length < 0 || final_length > n) {
    throw std::invalid_argument(
        "privacy_amplify: final_length must be in [0, key length]");
  }
  if (final_length == 0) return {};
  const std::int64_t m = final_length;
  const std::int64_t diag_bits = n + m - 1;
  const std::int64_t diag_words = (diag_bits + 63) / 64;
  const std::int64_t key_words = (n + 63) / 64;
  // Extra zeroed words allow unmasked shifted reads past the diagonal end;
  // bits beyond position n of any window are ANDed against zero key padding.
  std::vector<std::uint64_t> diag(
      static_cast<std::size_t>((m - 1) / 64 + key_words + 2), 0);
  Rng bitstream(seed);
  for (std::int64_t w = 0; w < diag_words; ++w) {
    diag[static_cast<std::size_t>(w)] = bitstream.next();
  }

  std::vector<std::uint64_t> reversed_key(
      static_cast<std::size_t>(key_words), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    if (key[static_cast<std::size_t>(n - 1 - i)]) {
      reversed_key[static_cast<std::size_t>(i / 64)] |= 1ull << (i % 64);
    }
  }

  std::vector<std::uint8_t> out(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j < m; ++j) {
    const std::int64_t word = j / 64;
    const int shift = static_cast<int>(j % 64);
    std::uint64_t acc = 0;
    for (std::int64_t w = 0; w < key_words; ++w) {
      const std::size_t idx = static_cast<std::size_t>(word + w);
      const std::uint64_t window =
          shift == 0 ? diag[idx]
                     : (diag[idx] >> shift) | (diag[idx + 1] << (64 - shift));
      acc ^= window & reversed_key[static_cast<std::size_t>(w)];
    }
    out[static_cast<std::size_t>(j)] =
        static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

}  // namespace detbb84
