#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "detbb84/rng.hpp"

namespace detbb84 {

// The two conjugate encoding bases. Measuring a Z-encoded state in X yields
// a uniformly random bit, and vice versa.
enum class Basis : std::uint8_t { Z = 0, X = 1 };

inline char basis_char(Basis b) { return b == Basis::Z ? 'Z' : 'X'; }

// The four abstract BB84 state labels.
enum class StateLabel : std::uint8_t { Zero, One, Plus, Minus };

struct QubitSignal {
  int encoded_bit = 0;
  Basis encoded_basis = Basis::Z;
  int photon_count = 0;  // 0 is a vacuum pulse; it can never signal-click
  std::int64_t emission_time_ns = 0;
};

enum class SourceStatistics : std::uint8_t { Poisson, SinglePhoton };

struct SourceModel {
  double mu = 0.1;  // mean photon number, > 0
  SourceStatistics statistics = SourceStatistics::Poisson;
};

// (bit, basis) -> state label, bijective.
inline StateLabel state_label(int bit, Basis basis) {
  if (basis == Basis::Z) return bit ? StateLabel::One : StateLabel::Zero;
  return bit ? StateLabel::Minus : StateLabel::Plus;
}

inline QubitSignal encode(int bit, Basis basis) {
  QubitSignal s;
  s.encoded_bit = bit & 1;
  s.encoded_basis = basis;
  s.photon_count = 1;
  return s;
}

// Matched-basis readout; the inverse of encode.
inline int decode(const QubitSignal& s, Basis basis) {
  if (basis != s.encoded_basis) {
    throw std::domain_error("decode: basis does not match the encoding");
  }
  return s.encoded_bit;
}

// Single-qubit measurement rule: matched basis is deterministic, the
// conjugate basis is a fair coin.
inline int measure(const QubitSignal& s, Basis basis, Rng& rng) {
  if (basis == s.encoded_basis) return s.encoded_bit;
  return rng.bit();
}

inline int sample_photon_number(const SourceModel& source, Rng& rng) {
  if (source.mu <= 0.0) throw std::domain_error("source: mu must be > 0");
  if (source.statistics == SourceStatistics::SinglePhoton) return 1;
  return sample_poisson(source.mu, rng);
}

// Probability that a pulse carries more than one photon. For Poisson
// statistics this is S_m = 1 - e^{-mu}(1 + mu).
inline double multiphoton_probability(SourceStatistics statistics, double mu) {
  if (mu <= 0.0) throw std::domain_error("multiphoton_probability: mu must be > 0");
  if (statistics == SourceStatistics::SinglePhoton) return 0.0;
  return 1.0 - std::exp(-mu) * (1.0 + mu);
}

inline double multiphoton_probability(const SourceModel& source) {
  return multiphoton_probability(source.statistics, source.mu);
}

}  // namespace detbb84
