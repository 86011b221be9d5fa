#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "detbb84/adversary.hpp"
#include "detbb84/channel.hpp"
#include "detbb84/core.hpp"
#include "detbb84/rates.hpp"
#include "detbb84/rng.hpp"
#include "detbb84/timing.hpp"

namespace detbb84 {

enum class Variant : std::uint8_t { BB84, DetBasic, DetPractical };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::BB84: return "bb84";
    case Variant::DetBasic: return "det_basic";
    default: return "det_practical";
  }
}

// Pulses are emitted on a fixed clock; per-pulse schedules are independent,
// so the period only sets timestamps.
inline constexpr std::int64_t kPulsePeriodNs = 100;

struct SessionConfig {
  std::int64_t n_target = 250;  // N, the final-key sizing unit
  double eta_c = 4000.0;        // channel-loss oversampling factor
  double eta_m = 500.0;         // memory-loss oversampling factor
  Variant variant = Variant::DetPractical;
  double qber_abort_threshold = 0.11;
  std::int64_t pulse_override = 0;  // > 0: send exactly this many pulses
};

inline void validate(const SessionConfig& c) {
  if (c.n_target < 1) {
    throw std::invalid_argument("session: n_target must be >= 1");
  }
  if (c.eta_c < 0.0 || c.eta_m < 0.0) {
    throw std::invalid_argument("session: eta_c and eta_m must be >= 0");
  }
  if (c.qber_abort_threshold <= 0.0 || c.qber_abort_threshold >= 0.5) {
    throw std::invalid_argument(
        "session: qber_abort_threshold must be in (0, 0.5)");
  }
  if (c.pulse_override < 0) {
    throw std::invalid_argument("session: pulse_override must be >= 0");
  }
}

// W = ceil((4 + eta_c + eta_m) N): enough pulses that the sifted key
// reaches 4N on the provisioned channel.
inline std::int64_t pulse_budget(const SessionConfig& c) {
  if (c.pulse_override > 0) return c.pulse_override;
  return static_cast<std::int64_t>(
      std::ceil((4.0 + c.eta_c + c.eta_m) * static_cast<double>(c.n_target)));
}

// Per-pulse ledger row joining Alice's side with Bob's observations.
struct PulseRecord {
  std::int64_t index = 0;
  std::int64_t emission_time = 0;     // t_q
  std::int64_t basis_sent_time = 0;   // t_b
  std::int64_t basis_arrival = 0;     // T, valid iff has_basis_arrival
  std::int64_t measurement_time = 0;  // valid iff has_measurement_time
  std::uint8_t alice_bit = 0;         // d
  Basis alice_basis = Basis::Z;       // b
  Basis bob_basis = Basis::Z;         // B, valid iff has_bob_basis
  std::uint8_t bob_bit = 0;           // D, valid iff has_bob_bit (implies clicked)
  bool clicked = false;
  bool has_bob_basis = false;
  bool has_basis_arrival = false;
  bool has_bob_bit = false;
  bool has_measurement_time = false;
};

enum class AbortReason : std::uint8_t {
  None,
  BasisMismatch,
  TimingViolation,
  QberExceeded,
  InsufficientBits,
};

inline const char* abort_reason_name(AbortReason r) {
  switch (r) {
    case AbortReason::None: return "none";
    case AbortReason::BasisMismatch: return "basis_mismatch";
    case AbortReason::TimingViolation: return "timing_violation";
    case AbortReason::QberExceeded: return "qber_exceeded";
    default: return "insufficient_bits";
  }
}

struct SessionTranscript {
  Variant variant = Variant::DetPractical;
  double qber_threshold = 0.11;
  std::vector<PulseRecord> records;
  std::vector<std::uint8_t> sifted_alice;
  std::vector<std::uint8_t> sifted_bob;
  std::vector<std::int64_t> sifted_record;   // records row per sifted bit
  std::vector<std::int64_t> check_indices;   // positions into the sifted key
  AbortReason abort = AbortReason::None;
  std::optional<std::vector<std::uint8_t>> final_key_alice;
  std::optional<std::vector<std::uint8_t>> final_key_bob;
  std::int64_t pulses_sent = 0;
  std::int64_t clicks = 0;
  double measured_qber = 0.0;
  bool qber_measured = false;
  double beta_estimate = 0.0;
  bool beta_estimated = false;
  std::int64_t leaked_bits = 0;
};

struct SiftOutcome {
  std::vector<std::uint8_t> alice;
  std::vector<std::uint8_t> bob;
  std::vector<std::int64_t> kept;  // record rows, ascending
};

// BB84 keeps clicked pulses whose bases coincide; the deterministic
// variants keep every clicked pulse (nothing is discarded).
inline SiftOutcome sift(const std::vector<PulseRecord>& records,
                        Variant variant) {
  SiftOutcome out;
  for (const PulseRecord& rec : records) {
    if (!rec.clicked) continue;
    if (variant == Variant::BB84 &&
        (!rec.has_bob_basis || rec.bob_basis != rec.alice_basis)) {
      continue;
    }
    out.alice.push_back(rec.alice_bit);
    out.bob.push_back(rec.bob_bit);
    out.kept.push_back(rec.index);
  }
  return out;
}

// Uniformly random check subset of the sifted key; the protocol needs 4N
// sifted bits to reserve 2N for checking and 2N for the key.
inline std::optional<std::vector<std::int64_t>> select_check_bits(
    std::int64_t sifted_length, std::int64_t target, Rng& rng) {
  if (sifted_length < 2 * target) return std::nullopt;
  return sample_without_replacement(sifted_length, target, rng);
}

inline double estimate_qber(const std::vector<std::uint8_t>& alice_bits,
                            const std::vector<std::uint8_t>& bob_bits) {
  if (alice_bits.size() != bob_bits.size()) {
    throw std::invalid_argument("estimate_qber: length mismatch");
  }
  if (alice_bits.empty()) {
    throw std::invalid_argument("estimate_qber: empty input");
  }
  std::int64_t disagreements = 0;
  for (std::size_t i = 0; i < alice_bits.size(); ++i) {
    disagreements += alice_bits[i] ^ bob_bits[i];
  }
  return static_cast<double>(disagreements) /
         static_cast<double>(alice_bits.size());
}

// Expected basis-arrival time for the variants that have one. The basic
// variant waits for Bob's receipt, so the basis crosses the line one trip
// later than in the practical schedule.
inline std::int64_t expected_basis_arrival(Variant variant, std::int64_t t_q,
                                           const TimingParams& p) {
  if (variant == Variant::DetBasic) {
    return t_q + 3 * p.tau_ns + p.delta_ns;
  }
  return expected_arrival(t_q, p);
}

// Check-bit verification, first failure wins: (i) basis values coincide,
// (ii) arrival times sit inside the gate window, (iii) check QBER is
// acceptable. BB84 has no basis-arrival contract, so (ii) is vacuous there.
inline AbortReason verify_checks(const SessionTranscript& t,
                                 const TimingParams& timing) {
  for (const std::int64_t idx : t.check_indices) {
    const PulseRecord& rec =
        t.records[static_cast<std::size_t>(
            t.sifted_record[static_cast<std::size_t>(idx)])];
    if (!rec.has_bob_basis || rec.bob_basis != rec.alice_basis) {
      return AbortReason::BasisMismatch;
    }
  }
  if (t.variant != Variant::BB84) {
    for (const std::int64_t idx : t.check_indices) {
      const PulseRecord& rec =
          t.records[static_cast<std::size_t>(
              t.sifted_record[static_cast<std::size_t>(idx)])];
      if (!rec.has_basis_arrival) return AbortReason::TimingViolation;
      const std::int64_t deviation =
          rec.basis_arrival -
          expected_basis_arrival(t.variant, rec.emission_time, timing);
      if (deviation > timing.epsilon_ns || deviation < -timing.epsilon_ns) {
        return AbortReason::TimingViolation;
      }
    }
  }
  if (!t.check_indices.empty()) {
    std::vector<std::uint8_t> a;
    std::vector<std::uint8_t> b;
    a.reserve(t.check_indices.size());
    b.reserve(t.check_indices.size());
    for (const std::int64_t idx : t.check_indices) {
      a.push_back(t.sifted_alice[static_cast<std::size_t>(idx)]);
      b.push_back(t.sifted_bob[static_cast<std::size_t>(idx)]);
    }
    if (estimate_qber(a, b) > t.qber_threshold) {
      return AbortReason::QberExceeded;
    }
  }
  return AbortReason::None;
}

namespace detail {

struct VariantSchedule {
  std::int64_t storage_ns = 0;       // time in the loop, honest schedule
  double line_survival = 0.0;        // Alice's doorstep to Bob's doorstep
  double station_survival = 0.0;     // storage loop plus receiver loss
};

inline VariantSchedule make_schedule(Variant variant, const FiberParams& fiber,
                                     const TimingParams& timing) {
  VariantSchedule s;
  if (variant == Variant::BB84) {
    // single pass, receiver loss folded into the line
    s.line_survival = transmission_probability(fiber);
    s.station_survival = 1.0;
    return s;
  }
  s.storage_ns = variant == Variant::DetBasic
                     ? 2 * timing.tau_ns
                     : timing.tau_ns + timing.delta_cap_ns;
  FiberParams line = fiber;
  line.receiver_loss_db = 0.0;
  s.line_survival = transmission_probability(line);
  // The loop is fiber with the same attenuation; sized to span the storage
  // time, it adds length_km (+ loop allowance) to the path. Receiver loss
  // applies once, at the station.
  const double loop_km =
      storage_loop_from_delay(s.storage_ns, fiber.refractive_index);
  const double station_db =
      fiber.alpha_db_per_km * loop_km + fiber.receiver_loss_db;
  s.station_survival = std::pow(10.0, -station_db / 10.0);
  return s;
}

}  // namespace detail

// Executes one full protocol session: W pulses encoded and sent, bases
// disclosed on the variant's schedule, Bob's gated measurements, loss
// announcement, check selection, the three-way check verification, then
// error correction and privacy amplification on 2N of the surviving bits.
// An abort is a correct protocol outcome, not a failure.
inline SessionTranscript run_session(const SessionConfig& cfg,
                                     const FiberParams& fiber,
                                     const DetectorParams& det,
                                     const TimingParams& timing,
                                     const SourceModel& source,
                                     const AttackStrategy& adversary,
                                     Rng& rng) {
  validate(cfg);
  validate(fiber);
  validate(det);
  validate(timing);
  validate(adversary);
  if (source.mu <= 0.0) throw std::invalid_argument("source: mu must be > 0");

  SessionTranscript t;
  t.variant = cfg.variant;
  t.qber_threshold = cfg.qber_abort_threshold;
  const std::int64_t budget = pulse_budget(cfg);
  t.pulses_sent = budget;
  t.records.reserve(static_cast<std::size_t>(budget));

  const detail::VariantSchedule schedule =
      detail::make_schedule(cfg.variant, fiber, timing);
  const std::int64_t loop_transit_ns =
      schedule.storage_ns + timing.delta_ns + timing.delta_prime_ns;

  for (std::int64_t i = 0; i < budget; ++i) {
    PulseRecord rec;
    rec.index = i;
    rec.emission_time = i * kPulsePeriodNs;
    rec.alice_bit = static_cast<std::uint8_t>(rng.bit());
    rec.alice_basis = rng.bit() ? Basis::X : Basis::Z;

    QubitSignal signal = encode(rec.alice_bit, rec.alice_basis);
    signal.emission_time_ns = rec.emission_time;
    signal.photon_count = sample_photon_number(source, rng);

    const bool attacked = adversary.kind != AttackKind::None &&
                          rng.bernoulli(adversary.fraction);
    if (attacked && adversary.kind == AttackKind::InterceptResend) {
      signal = intercept_resend(signal, rng);
    }

    if (cfg.variant == Variant::BB84) {
      // Bob measures on arrival in a fresh fair-coin basis; Alice announces
      // her basis afterwards for reconciliation.
      rec.basis_sent_time = rec.emission_time + 2 * timing.tau_ns;
      rec.has_bob_basis = true;
      rec.bob_basis = rng.bit() ? Basis::X : Basis::Z;
      int surviving = thin_photons(signal.photon_count,
                                   schedule.line_survival, rng);
      if (attacked && adversary.kind == AttackKind::DelayForBasis) {
        surviving = 0;  // nothing to wait for: the held qubit never arrives
      }
      QubitSignal at_detector = signal;
      at_detector.photon_count = surviving;
      const DetectResult outcome = detect(at_detector, rec.bob_basis, det, rng);
      if (outcome.click) {
        rec.clicked = true;
        rec.has_bob_bit = true;
        rec.bob_bit = static_cast<std::uint8_t>(outcome.bit);
        rec.has_measurement_time = true;
        rec.measurement_time = rec.emission_time + timing.tau_ns;
      }
    } else {
      rec.basis_sent_time = cfg.variant == Variant::DetBasic
                                ? rec.emission_time + 2 * timing.tau_ns
                                : basis_send_time(rec.emission_time, timing);
      // The disclosed basis value crosses an authenticated channel; Eve can
      // delay it but not alter it.
      rec.has_bob_basis = true;
      rec.bob_basis = rec.alice_basis;

      int surviving = thin_photons(signal.photon_count,
                                   schedule.line_survival, rng);
      std::int64_t qubit_entry = rec.emission_time + timing.tau_ns;
      std::int64_t basis_arrival =
          classical_send(rec.bob_basis == Basis::X ? 1 : 0,
                         rec.basis_sent_time, timing.tau_ns)
              .delivered_at_ns +
          timing.delta_ns;
      if (attacked && adversary.kind == AttackKind::DelayForBasis) {
        // Eve at Bob's doorstep: she reads the basis as it passes, measures
        // her held qubit in it, and forwards a perfect single photon. To put
        // that photon inside Bob's gate she must also delay the disclosure,
        // which is what the arrival check sees.
        const std::int64_t disclosure_at_eve =
            rec.basis_sent_time + timing.tau_ns;
        const DelayedSignal held =
            delay_for_basis(signal, disclosure_at_eve, 0);
        qubit_entry = held.entry_time_ns;
        surviving = surviving >= 1 ? 1 : 0;
        basis_arrival =
            qubit_entry + schedule.storage_ns + timing.delta_ns -
            timing.epsilon_ns;
      }
      rec.has_basis_arrival = true;
      rec.basis_arrival = basis_arrival;

      surviving = thin_photons(surviving, schedule.station_survival, rng);

      const std::int64_t loop_exit = qubit_entry + loop_transit_ns;
      const std::int64_t gate_center = basis_arrival + timing.delta_prime_ns;
      const std::int64_t gate_deviation = loop_exit - gate_center;
      const bool in_gate = gate_deviation <= timing.epsilon_ns &&
                           gate_deviation >= -timing.epsilon_ns;
      QubitSignal at_detector = signal;
      at_detector.photon_count = in_gate ? surviving : 0;
      const DetectResult outcome = detect(at_detector, rec.bob_basis, det, rng);
      if (outcome.click) {
        rec.clicked = true;
        rec.has_bob_bit = true;
        rec.bob_bit = static_cast<std::uint8_t>(outcome.bit);
        rec.has_measurement_time = true;
        rec.measurement_time = gate_center;
      }
    }

    if (rec.clicked) ++t.clicks;
    t.records.push_back(rec);
  }

  SiftOutcome sifted = sift(t.records, cfg.variant);
  t.sifted_alice = std::move(sifted.alice);
  t.sifted_bob = std::move(sifted.bob);
  t.sifted_record = std::move(sifted.kept);

  const std::int64_t n = cfg.n_target;
  const auto check = select_check_bits(
      static_cast<std::int64_t>(t.sifted_alice.size()), 2 * n, rng);
  if (!check) {
    t.abort = AbortReason::InsufficientBits;
    return t;
  }
  t.check_indices = *check;

  {
    std::vector<std::uint8_t> a;
    std::vector<std::uint8_t> b;
    a.reserve(t.check_indices.size());
    b.reserve(t.check_indices.size());
    for (const std::int64_t idx : t.check_indices) {
      a.push_back(t.sifted_alice[static_cast<std::size_t>(idx)]);
      b.push_back(t.sifted_bob[static_cast<std::size_t>(idx)]);
    }
    t.measured_qber = estimate_qber(a, b);
    t.qber_measured = true;
  }

  const AbortReason verdict = verify_checks(t, timing);
  if (verdict != AbortReason::None) {
    t.abort = verdict;
    return t;
  }

  // The final step works on exactly 2N of the unchecked sifted bits, the
  // session's key budget; any surplus stays in the transcript unused.
  std::vector<std::uint8_t> key_a;
  std::vector<std::uint8_t> key_b;
  key_a.reserve(static_cast<std::size_t>(2 * n));
  key_b.reserve(static_cast<std::size_t>(2 * n));
  {
    std::size_t next_check = 0;
    for (std::int64_t idx = 0;
         idx < static_cast<std::int64_t>(t.sifted_alice.size()) &&
         static_cast<std::int64_t>(key_a.size()) < 2 * n;
         ++idx) {
      if (next_check < t.check_indices.size() &&
          t.check_indices[next_check] == idx) {
        ++next_check;
        continue;
      }
      key_a.push_back(t.sifted_alice[static_cast<std::size_t>(idx)]);
      key_b.push_back(t.sifted_bob[static_cast<std::size_t>(idx)]);
    }
  }

  CorrectionResult corrected =
      error_correct(key_a, std::move(key_b), t.measured_qber, rng);
  t.leaked_bits = corrected.leaked_bits;

  const double p_exp_hat = static_cast<double>(t.clicks) /
                           static_cast<double>(t.pulses_sent);
  t.beta_estimate = beta(p_exp_hat, multiphoton_probability(source));
  t.beta_estimated = true;

  const KeyLengthResult key_length =
      final_key_length(static_cast<std::int64_t>(key_a.size()),
                       t.measured_qber, t.beta_estimate, 1.0);
  if (key_length.margin_exhausted || key_length.length == 0) {
    t.abort = AbortReason::QberExceeded;
    return t;
  }

  const std::uint64_t hash_seed = rng.next();
  t.final_key_alice = privacy_amplify(key_a, key_length.length, hash_seed);
  t.final_key_bob =
      privacy_amplify(corrected.corrected, key_length.length, hash_seed);
  return t;
}

// Storage interval a record witnessed, per the transcript invariant that
// honest practical runs store for exactly tau + delta_cap.
inline std::int64_t record_storage_interval(const PulseRecord& rec,
                                            const TimingParams& timing) {
  if (!rec.has_basis_arrival) {
    throw std::domain_error("record has no basis arrival");
  }
  return storage_interval(rec.basis_arrival,
                          rec.emission_time + timing.tau_ns, timing);
}

// Line-delimited transcript export, one record per line, fixed columns,
// absent fields empty. Byte-identical under replay with the same seed.
inline void write_transcript(std::ostream& os, const SessionTranscript& t) {
  os << "index,alice_bit,alice_basis,emission_ns,basis_sent_ns,bob_basis,"
        "basis_arrival_ns,clicked,bob_bit,measurement_ns\n";
  char line[192];
  for (const PulseRecord& rec : t.records) {
    char bob_basis[2] = {0, 0};
    if (rec.has_bob_basis) bob_basis[0] = basis_char(rec.bob_basis);
    char basis_arrival[24] = {0};
    if (rec.has_basis_arrival) {
      std::snprintf(basis_arrival, sizeof(basis_arrival), "%lld",
                    static_cast<long long>(rec.basis_arrival));
    }
    char bob_bit[4] = {0};
    if (rec.has_bob_bit) {
      std::snprintf(bob_bit, sizeof(bob_bit), "%d",
                    static_cast<int>(rec.bob_bit));
    }
    char measurement[24] = {0};
    if (rec.has_measurement_time) {
      std::snprintf(measurement, sizeof(measurement), "%lld",
                    static_cast<long long>(rec.measurement_time));
    }
    std::snprintf(line, sizeof(line), "%lld,%d,%c,%lld,%lld,%s,%s,%d,%s,%s\n",
                  static_cast<long long>(rec.index),
                  static_cast<int>(rec.alice_bit),
                  basis_char(rec.alice_basis),
                  static_cast<long long>(rec.emission_time),
                  static_cast<long long>(rec.basis_sent_time), bob_basis,
                  basis_arrival, rec.clicked ? 1 : 0, bob_bit, measurement);
    os << line;
  }
}

}  // namespace detbb84
