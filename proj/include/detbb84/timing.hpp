#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>

namespace detbb84 {

// The five timing constants that carry the security argument. All times are
// integer nanoseconds so the boundary test has no float ambiguity.
struct TimingParams {
  std::int64_t tau_ns = 0;          // one-way signal travel time
  std::int64_t delta_cap_ns = 100;  // basis-disclosure delay (security parameter)
  std::int64_t delta_ns = 0;        // classical receive electronics delay
  std::int64_t delta_prime_ns = 0;  // measurement trigger offset, >= delta_ns
  std::int64_t epsilon_ns = 10;     // detector gate half-window
};

inline void validate(const TimingParams& p) {
  if (p.tau_ns < 0 || p.delta_ns < 0 || p.delta_prime_ns < 0 || p.epsilon_ns < 0) {
    throw std::invalid_argument("timing: all delays must be >= 0");
  }
  if (p.delta_cap_ns <= 0) {
    throw std::invalid_argument("timing: delta_cap_ns must be > 0");
  }
  if (p.epsilon_ns >= p.delta_cap_ns) {
    throw std::invalid_argument("timing: epsilon_ns must be < delta_cap_ns");
  }
  if (p.delta_prime_ns < p.delta_ns) {
    throw std::invalid_argument("timing: delta_prime_ns must be >= delta_ns");
  }
}

// When Alice discloses the basis for the qubit emitted at t_q: t_q + tau + delta_cap.
// She does not wait for any receipt from Bob.
inline std::int64_t basis_send_time(std::int64_t t_q, const TimingParams& p) {
  return t_q + p.tau_ns + p.delta_cap_ns;
}

// The basis-arrival time Bob must observe: t_q + 2 tau + delta_cap + delta.
inline std::int64_t expected_arrival(std::int64_t t_q, const TimingParams& p) {
  return t_q + 2 * p.tau_ns + p.delta_cap_ns + p.delta_ns;
}

// Arrival verification, exact at the epsilon boundary and symmetric in sign.
inline bool verify_arrival(std::int64_t t_observed, std::int64_t t_q,
                           const TimingParams& p) {
  const std::int64_t deviation = t_observed - expected_arrival(t_q, p);
  return deviation <= p.epsilon_ns && deviation >= -p.epsilon_ns;
}

// The latest time a qubit may enter Bob's station without shifting its
// basis-arrival signature: t_q + tau. Strictly earlier than basis_send_time
// whenever delta_cap > 0, which is the security theorem.
inline std::int64_t eve_latest_undetected_entry(std::int64_t t_q,
                                                const TimingParams& p) {
  return t_q + p.tau_ns;
}

// Time the photon spends stored at Bob before the measurement process
// begins, excluding the receive electronics: honestly exactly tau + delta_cap.
inline std::int64_t storage_interval(std::int64_t basis_arrival,
                                     std::int64_t qubit_entry,
                                     const TimingParams& p) {
  return (basis_arrival - p.delta_ns) - qubit_entry;
}

}  // namespace detbb84
