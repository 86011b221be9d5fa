#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "detbb84/core.hpp"
#include "detbb84/rng.hpp"

namespace detbb84 {

// Vacuum speed of light in km per ns.
inline constexpr double kSpeedOfLightKmPerNs = 2.99792458e-4;

struct FiberParams {
  double alpha_db_per_km = 0.21;  // absorption coefficient
  double length_km = 10.0;
  double receiver_loss_db = 0.0;
  double refractive_index = 1.468;
};

struct DetectorParams {
  double efficiency = 0.045;  // eta_B
  double dark_prob = 8.5e-7;  // dark-count probability per gate
  double error_rate = 0.0;    // intrinsic flip probability on signal clicks
  std::int64_t gate_window_ns = 10;  // shared with TimingParams::epsilon_ns
};

inline void validate(const FiberParams& f) {
  if (f.alpha_db_per_km < 0.0 || f.length_km < 0.0 || f.receiver_loss_db < 0.0) {
    throw std::invalid_argument("fiber: losses and length must be >= 0");
  }
  if (f.refractive_index < 1.0) {
    throw std::invalid_argument("fiber: refractive_index must be >= 1");
  }
}

inline void validate(const DetectorParams& d) {
  if (d.efficiency < 0.0 || d.efficiency > 1.0) {
    throw std::invalid_argument("detector: efficiency must be in [0,1]");
  }
  if (d.dark_prob < 0.0 || d.dark_prob > 1.0) {
    throw std::invalid_argument("detector: dark_prob must be in [0,1]");
  }
  if (d.error_rate < 0.0 || d.error_rate >= 0.5) {
    throw std::invalid_argument("detector: error_rate must be in [0, 0.5)");
  }
}

// One-way channel transmission probability: 10^-(alpha L + L_c)/10.
inline double transmission_probability(const FiberParams& f) {
  const double total_db = f.alpha_db_per_km * f.length_km + f.receiver_loss_db;
  return std::pow(10.0, -total_db / 10.0);
}

// Transmission for the deterministic variant: the photon crosses the line,
// then waits in Bob's storage loop, so the attenuated path is the doubled
// line plus the loop: 10^-(alpha (2L + loop) + L_c)/10.
inline double transmission_probability_det(const FiberParams& f,
                                           double storage_loop_km) {
  if (storage_loop_km < 0.0) {
    throw std::invalid_argument("storage_loop_km must be >= 0");
  }
  const double total_db =
      f.alpha_db_per_km * (2.0 * f.length_km + storage_loop_km) +
      f.receiver_loss_db;
  return std::pow(10.0, -total_db / 10.0);
}

inline double propagation_delay_ns(double length_km, double refractive_index) {
  if (length_km < 0.0) throw std::invalid_argument("length_km must be >= 0");
  return refractive_index * length_km / kSpeedOfLightKmPerNs;
}

inline std::int64_t propagation_delay_ns_rounded(double length_km,
                                                 double refractive_index) {
  return std::llround(propagation_delay_ns(length_km, refractive_index));
}

struct ChannelOutput {
  QubitSignal signal;           // photon_count thinned by the channel
  std::int64_t arrival_time_ns = 0;
};

// Per-photon independent survival (beamsplitter loss model).
inline int thin_photons(int photon_count, double survival, Rng& rng) {
  int surviving = 0;
  for (int i = 0; i < photon_count; ++i) {
    if (rng.bernoulli(survival)) ++surviving;
  }
  return surviving;
}

inline ChannelOutput transmit(const QubitSignal& s, const FiberParams& f,
                              Rng& rng) {
  ChannelOutput out;
  out.signal = s;
  out.signal.photon_count =
      thin_photons(s.photon_count, transmission_probability(f), rng);
  out.arrival_time_ns =
      s.emission_time_ns +
      propagation_delay_ns_rounded(f.length_km, f.refractive_index);
  return out;
}

struct DetectResult {
  bool click = false;
  int bit = 0;
  bool dark_only = false;  // no photon contributed; the bit is random
};

// Gated detection: a signal click with probability 1-(1-eta_B)^k, an
// independent dark click, inclusion-exclusion on the OR. A dark-only click
// yields a uniformly random bit.
inline DetectResult detect(const QubitSignal& s, Basis basis,
                           const DetectorParams& det, Rng& rng) {
  bool signal_click = false;
  for (int i = 0; i < s.photon_count && !signal_click; ++i) {
    signal_click = rng.bernoulli(det.efficiency);
  }
  const bool dark_click = rng.bernoulli(det.dark_prob);
  DetectResult r;
  if (!signal_click && !dark_click) return r;
  r.click = true;
  if (signal_click) {
    r.bit = measure(s, basis, rng);
    if (det.error_rate > 0.0 && rng.bernoulli(det.error_rate)) r.bit ^= 1;
  } else {
    r.dark_only = true;
    r.bit = rng.bit();
  }
  return r;
}

struct ClassicalDelivery {
  int payload = 0;
  std::int64_t delivered_at_ns = 0;
};

// The authenticated classical channel: error-free, fixed latency.
inline ClassicalDelivery classical_send(int payload, std::int64_t send_time_ns,
                                        std::int64_t tau_ns) {
  return ClassicalDelivery{payload, send_time_ns + tau_ns};
}

}  // namespace detbb84
