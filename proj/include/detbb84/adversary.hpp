#pragma once

#include <cstdint>
#include <stdexcept>

#include "detbb84/core.hpp"
#include "detbb84/rng.hpp"

namespace detbb84 {

enum class AttackKind : std::uint8_t { None, InterceptResend, DelayForBasis };

struct AttackStrategy {
  AttackKind kind = AttackKind::None;
  double fraction = 1.0;  // fraction of pulses attacked, in [0,1]
};

inline void validate(const AttackStrategy& a) {
  if (a.fraction < 0.0 || a.fraction > 1.0) {
    throw std::invalid_argument("attack: fraction must be in [0,1]");
  }
}

// Eve measures in a uniformly random basis and resends the state matching
// her outcome in her basis; timing untouched. Against a matching Bob basis
// this induces QBER 1/4 (enumerable over the 16-outcome tree).
inline QubitSignal intercept_resend(const QubitSignal& s, Rng& rng) {
  const Basis eve_basis = rng.bit() ? Basis::X : Basis::Z;
  const int outcome = measure(s, eve_basis, rng);
  QubitSignal resent = s;
  resent.encoded_bit = outcome;
  resent.encoded_basis = eve_basis;
  return resent;
}

struct DelayedSignal {
  QubitSignal signal;
  std::int64_t entry_time_ns = 0;  // when the held qubit enters Bob's station
};

// Eve holds the qubit until the basis disclosure reaches her, measures in
// the disclosed basis (a perfect copy, zero induced error), and forwards.
// The forwarded qubit cannot enter Bob's station before she has read the
// basis, which is already delta_cap past the undetected-entry deadline.
inline DelayedSignal delay_for_basis(const QubitSignal& s,
                                     std::int64_t basis_disclosure_time_ns,
                                     std::int64_t eve_to_bob_delay_ns) {
  DelayedSignal out;
  out.signal = s;  // measured in the true basis: the state is unchanged
  out.entry_time_ns = basis_disclosure_time_ns + eve_to_bob_delay_ns;
  return out;
}

}  // namespace detbb84
