#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "detbb84/channel.hpp"
#include "detbb84/core.hpp"
#include "detbb84/postprocess.hpp"

namespace detbb84 {

// Storage loop length equivalent to holding a photon for delay_ns in fiber.
inline double storage_loop_from_delay(std::int64_t delay_ns,
                                      double refractive_index) {
  return static_cast<double>(delay_ns) * kSpeedOfLightKmPerNs /
         refractive_index;
}

// All inputs of the closed-form secure-rate model.
struct RateParams {
  double mu = 0.1;
  FiberParams fiber{};
  DetectorParams detector{};
  double storage_loop_km = storage_loop_from_delay(100, 1.468);
  double e_det = 0.0;      // intrinsic error fraction on signal clicks
  double f_cascade = 1.0;  // reconciliation inefficiency factor
  SourceModel source{};    // statistics feed the multiphoton fraction
};

inline void validate(const RateParams& p) {
  validate(p.fiber);
  validate(p.detector);
  if (p.mu <= 0.0) throw std::invalid_argument("rates: mu must be > 0");
  if (p.storage_loop_km < 0.0) {
    throw std::invalid_argument("rates: storage_loop_km must be >= 0");
  }
  if (p.e_det < 0.0 || p.e_det >= 0.5) {
    throw std::invalid_argument("rates: e_det must be in [0, 0.5)");
  }
  if (p.f_cascade < 0.0) {
    throw std::invalid_argument("rates: f_cascade must be >= 0");
  }
}

// Signal-click probability at Bob: 1 - exp(-eta_B eta_T mu).
inline double p_signal(double eta_b, double eta_t, double mu) {
  return 1.0 - std::exp(-eta_b * eta_t * mu);
}

// Total click probability, dark and signal combined by inclusion-exclusion.
inline double p_exp(double p_sig, double p_dark) {
  return p_sig + p_dark - p_sig * p_dark;
}

// Multiphoton security fraction (p_exp - S_m)/p_exp; <= 0 means the
// photon-number-splitting margin is gone and the protocol is insecure.
inline double beta(double p_exp_value, double s_m) {
  if (p_exp_value <= 0.0) {
    throw std::domain_error("beta: p_exp must be > 0");
  }
  return (p_exp_value - s_m) / p_exp_value;
}

/// Error composition: misalignment on signal clicks plus random dark clicks.
inline double qber_model(double p_sig, double p_dark, double e_det) {
  const double pe = p_exp(p_sig, p_dark);
  if (pe <= 0.0) {
    throw std::domain_error("qber_model: p_exp must be > 0");
  }
  return (e_det * p_sig + 0.5 * p_dark) / pe;
}

struct RateResult {
  double rate = 0.0;     // secure bits per pulse, clamped at 0
  bool insecure = false; // multiphoton margin exhausted (beta <= 0 or e > beta)
};

namespace detail {

// Shared by both variants so their results differ only in the transmission
// probability and the sifting coefficient; this keeps the det = 2 x bb84
// effective-length identity exact in floating point.
inline RateResult secure_rate_from_eta(const RateParams& p, double eta_t,
                                       double coefficient) {
  const double ps = p_signal(p.detector.efficiency, eta_t, p.mu);
  const double pe = p_exp(ps, p.detector.dark_prob);
  if (pe <= 0.0) return {0.0, false};
  const double sm = multiphoton_probability(p.source.statistics, p.mu);
  const double b = beta(pe, sm);
  if (b <= 0.0) return {0.0, true};
  const double e = qber_model(ps, p.detector.dark_prob, p.e_det);
  if (e > b) return {0.0, true};
  const double gain = b * (1.0 - tau_fraction(e / b)) -
                      p.f_cascade * binary_entropy(e);
  if (gain <= 0.0) return {0.0, false};
  return {coefficient * pe * gain, false};
}

}  // namespace detail

// Standard BB84: coefficient 1/2 from basis reconciliation, one-way path.
inline RateResult secure_rate_bb84(const RateParams& p) {
  return detail::secure_rate_from_eta(p, transmission_probability(p.fiber),
                                      0.5);
}

// Deterministic variant: coefficient 1, doubled path plus storage loop.
inline RateResult secure_rate_det(const RateParams& p) {
  return detail::secure_rate_from_eta(
      p, transmission_probability_det(p.fiber, p.storage_loop_km), 1.0);
}

enum class RateVariant : std::uint8_t { BB84, Det };

inline const char* rate_variant_name(RateVariant v) {
  return v == RateVariant::BB84 ? "bb84" : "det";
}

inline RateResult secure_rate(const RateParams& p, RateVariant v) {
  return v == RateVariant::BB84 ? secure_rate_bb84(p) : secure_rate_det(p);
}

struct RatePoint {
  double distance_km = 0.0;
  double mu_opt = 0.0;
  double rate = 0.0;
  RateVariant variant = RateVariant::BB84;
  bool insecure = false;
};

struct RateCurve {
  std::vector<RatePoint> points;  // distances strictly increasing
};

struct OptimizeResult {
  double mu_opt = 0.0;
  double rate_opt = 0.0;
  bool found = false;  // false: no positive rate anywhere (NoSecureRate)
};

inline constexpr double kMuSearchLow = 1e-4;
inline constexpr double kMuSearchHigh = 1.0;
inline constexpr double kMuTolerance = 1e-5;

// Maximizes the secure rate over mu in (1e-4, 1]. A 200-point log-spaced
// pre-scan guards against multimodality (golden section refines around the
// global grid maximum); absolute mu tolerance 1e-5.
inline OptimizeResult optimize_mu(RateParams p, double length_km,
                                  RateVariant variant) {
  p.fiber.length_km = length_km;
  const auto rate_at = [&p, variant](double mu) {
    p.mu = mu;
    return secure_rate(p, variant).rate;
  };

  constexpr int kGridPoints = 200;
  const double span = kMuSearchHigh / kMuSearchLow;
  int best_index = -1;
  double best_rate = 0.0;
  double grid[kGridPoints];
  for (int i = 0; i < kGridPoints; ++i) {
    grid[i] = kMuSearchLow *
              std::pow(span, static_cast<double>(i) / (kGridPoints - 1));
    const double r = rate_at(grid[i]);
    if (r > best_rate) {
      best_rate = r;
      best_index = i;
    }
  }
  if (best_index < 0) return {};

  double a = grid[best_index > 0 ? best_index - 1 : 0];
  double b = grid[best_index < kGridPoints - 1 ? best_index + 1
                                               : kGridPoints - 1];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = rate_at(c);
  double fd = rate_at(d);
  while (b - a > kMuTolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = rate_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = rate_at(d);
    }
  }
  OptimizeResult result;
  result.mu_opt = (a + b) / 2.0;
  result.rate_opt = rate_at(result.mu_opt);
  result.found = true;
  if (result.rate_opt < best_rate) {  // never worse than the pre-scan
    result.mu_opt = grid[best_index];
    result.rate_opt = best_rate;
  }
  return result;
}

struct SweepResult {
  RateCurve bb84;
  RateCurve det;
  // Distances where a variant had no positive rate, omitted from its curve.
  std::vector<std::pair<RateVariant, double>> no_secure_rate;
};

inline SweepResult sweep(const RateParams& base, double lo, double hi,
                         double step) {
  if (step <= 0.0 || hi < lo) {
    throw std::invalid_argument("sweep: need step > 0 and hi >= lo");
  }
  SweepResult result;
  const auto count =
      static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::int64_t k = 0; k < count; ++k) {
    const double length = lo + static_cast<double>(k) * step;
    for (const RateVariant v : {RateVariant::BB84, RateVariant::Det}) {
      const OptimizeResult opt = optimize_mu(base, length, v);
      if (!opt.found) {
        result.no_secure_rate.emplace_back(v, length);
        continue;
      }
      RatePoint point;
      point.distance_km = length;
      point.mu_opt = opt.mu_opt;
      point.rate = opt.rate_opt;
      point.variant = v;
      (v == RateVariant::BB84 ? result.bb84 : result.det)
          .points.push_back(point);
    }
  }
  return result;
}

struct CrossoverResult {
  double distance_km = 0.0;
  bool found = false;
};

// Bisection on R_det(L)/R_bb84(L) - 1, each side independently mu-optimized,
// to a 0.01 km bracket. No sign change over [lo, hi] means no crossover.
inline CrossoverResult crossover_distance(const RateParams& base, double lo,
                                          double hi) {
  if (hi <= lo) throw std::invalid_argument("crossover: need hi > lo");
  const auto ratio_excess = [&base](double length) {
    const OptimizeResult det = optimize_mu(base, length, RateVariant::Det);
    const OptimizeResult bb84 = optimize_mu(base, length, RateVariant::BB84);
    if (!bb84.found || bb84.rate_opt <= 0.0) {
      return det.found ? 1.0 : -1.0;  // det alive after bb84 died: still above
    }
    if (!det.found) return -1.0;
    return det.rate_opt / bb84.rate_opt - 1.0;
  };
  double glo = ratio_excess(lo);
  double ghi = ratio_excess(hi);
  if (!(glo > 0.0 && ghi < 0.0)) return {};
  double a = lo;
  double b = hi;
  while (b - a > 0.01) {
    const double mid = (a + b) / 2.0;
    if (ratio_excess(mid) > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return {(a + b) / 2.0, true};
}

// CSV export: header plus one row per point, bb84 curve then det curve,
// full-precision floats so files round-trip and replay byte-identically.
inline std::string curve_to_csv(const RateCurve& bb84, const RateCurve& det) {
  std::string out = "variant,distance_km,mu_opt,rate,insecure_flag\n";
  char line[160];
  for (const RateCurve* curve : {&bb84, &det}) {
    for (const RatePoint& p : curve->points) {
      std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%d\n",
                    rate_variant_name(p.variant), p.distance_km, p.mu_opt,
                    p.rate, p.insecure ? 1 : 0);
      out += line;
    }
  }
  return out;
}

}  // namespace detbb84
