#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "detbb84/channel.hpp"
#include "detbb84/core.hpp"
#include "detbb84/protocol.hpp"
#include "detbb84/rates.hpp"
#include "detbb84/timing.hpp"

namespace detbb84 {

// Configuration problems are user errors, reported distinctly from internal
// failures so the CLI can map them to its own exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  FiberParams fiber{};
  DetectorParams detector{};
  std::int64_t delta_cap_ns = 100;
  std::int64_t epsilon_ns = 10;
  std::int64_t delta_ns = 50;        // receiver-side classical latency
  std::int64_t delta_prime_ns = 50;  // measurement electronics latency
  SourceModel source{};
  SessionConfig session{};
  double storage_loop_km = -1.0;  // < 0: derive from delta_cap and the fiber
  double f_cascade = 1.0;
  std::uint64_t master_seed = 20250819;
  std::string output_dir = ".";
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t first = 0;
  std::size_t last = s.size();
  while (first < last && (s[first] == ' ' || s[first] == '\t')) ++first;
  while (last > first && (s[last - 1] == ' ' || s[last - 1] == '\t' ||
                          s[last - 1] == '\r')) {
    --last;
  }
  return s.substr(first, last - first);
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" +
                      value + "'");
  }
}

inline std::int64_t parse_int(const std::string& key,
                              const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" +
                      value + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key,
                                const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size() || (!value.empty() && value[0] == '-')) {
      throw std::invalid_argument("trailing text");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key +
                      "' needs an unsigned integer, got '" + value + "'");
  }
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline void apply_config_entry(AppConfig& c, const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_uint;
  if (key == "fiber.alpha_db_per_km") {
    c.fiber.alpha_db_per_km = parse_double(key, value);
  } else if (key == "fiber.length_km") {
    c.fiber.length_km = parse_double(key, value);
  } else if (key == "fiber.receiver_loss_db") {
    c.fiber.receiver_loss_db = parse_double(key, value);
  } else if (key == "fiber.refractive_index") {
    c.fiber.refractive_index = parse_double(key, value);
  } else if (key == "detector.efficiency") {
    c.detector.efficiency = parse_double(key, value);
  } else if (key == "detector.dark_prob") {
    c.detector.dark_prob = parse_double(key, value);
  } else if (key == "detector.error_rate") {
    c.detector.error_rate = parse_double(key, value);
  } else if (key == "timing.delta_cap_ns") {
    c.delta_cap_ns = parse_int(key, value);
  } else if (key == "timing.epsilon_ns") {
    c.epsilon_ns = parse_int(key, value);
  } else if (key == "timing.delta_ns") {
    c.delta_ns = parse_int(key, value);
  } else if (key == "timing.delta_prime_ns") {
    c.delta_prime_ns = parse_int(key, value);
  } else if (key == "source.mu") {
    c.source.mu = parse_double(key, value);
  } else if (key == "source.statistics") {
    if (value == "poisson") {
      c.source.statistics = SourceStatistics::Poisson;
    } else if (value == "single_photon") {
      c.source.statistics = SourceStatistics::SinglePhoton;
    } else {
      throw ConfigError(
          "config: key 'source.statistics' must be poisson or single_photon, "
          "got '" + value + "'");
    }
  } else if (key == "session.n_target") {
    c.session.n_target = parse_int(key, value);
  } else if (key == "session.eta_c") {
    c.session.eta_c = parse_double(key, value);
  } else if (key == "session.eta_m") {
    c.session.eta_m = parse_double(key, value);
  } else if (key == "session.variant") {
    if (value == "bb84") {
      c.session.variant = Variant::BB84;
    } else if (value == "det_basic") {
      c.session.variant = Variant::DetBasic;
    } else if (value == "det_practical") {
      c.session.variant = Variant::DetPractical;
    } else {
      throw ConfigError(
          "config: key 'session.variant' must be bb84, det_basic, or "
          "det_practical, got '" + value + "'");
    }
  } else if (key == "session.qber_abort_threshold") {
    c.session.qber_abort_threshold = parse_double(key, value);
  } else if (key == "session.pulse_override") {
    c.session.pulse_override = parse_int(key, value);
  } else if (key == "rates.storage_loop_km") {
    c.storage_loop_km = parse_double(key, value);
  } else if (key == "rates.f_cascade") {
    c.f_cascade = parse_double(key, value);
  } else if (key == "run.master_seed") {
    c.master_seed = parse_uint(key, value);
  } else if (key == "run.output_dir") {
    c.output_dir = value;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

// key = value lines; # starts a comment; blank lines skipped. Unknown keys
// are errors so typos cannot silently fall back to defaults.
inline AppConfig parse_config(std::istream& in) {
  AppConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not a key = value pair: '" + body + "'");
    }
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " has an empty key");
    }
    apply_config_entry(c, key, value);
  }
  return c;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  return parse_config(in);
}

// tau is one-way propagation over the configured fiber; the detector gate
// width tracks the timing tolerance.
inline TimingParams timing_from(const AppConfig& c) {
  TimingParams t;
  t.tau_ns = propagation_delay_ns_rounded(c.fiber.length_km,
                                          c.fiber.refractive_index);
  t.delta_cap_ns = c.delta_cap_ns;
  t.delta_ns = c.delta_ns;
  t.delta_prime_ns = c.delta_prime_ns;
  t.epsilon_ns = c.epsilon_ns;
  return t;
}

inline double resolved_storage_loop_km(const AppConfig& c) {
  if (c.storage_loop_km >= 0.0) return c.storage_loop_km;
  return storage_loop_from_delay(c.delta_cap_ns, c.fiber.refractive_index);
}

inline DetectorParams detector_from(const AppConfig& c) {
  DetectorParams d = c.detector;
  d.gate_window_ns = c.epsilon_ns;
  return d;
}

inline RateParams to_rate_params(const AppConfig& c) {
  RateParams p;
  p.mu = c.source.mu;
  p.fiber = c.fiber;
  p.detector = detector_from(c);
  p.storage_loop_km = resolved_storage_loop_km(c);
  p.e_det = c.detector.error_rate;
  p.f_cascade = c.f_cascade;
  p.source = c.source;
  return p;
}

inline void validate(const AppConfig& c) {
  validate(c.fiber);
  validate(detector_from(c));
  validate(timing_from(c));
  validate(c.session);
  validate(to_rate_params(c));
  if (c.output_dir.empty()) {
    throw ConfigError("config: run.output_dir must not be empty");
  }
}

// Full resolved echo: every key with its effective value, plus the derived
// quantities the run will actually use.
inline std::string serialize_config(const AppConfig& c) {
  using detail::format_double;
  std::string out = "# resolved configuration\n";
  const auto add = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  };
  add("fiber.alpha_db_per_km", format_double(c.fiber.alpha_db_per_km));
  add("fiber.length_km", format_double(c.fiber.length_km));
  add("fiber.receiver_loss_db", format_double(c.fiber.receiver_loss_db));
  add("fiber.refractive_index", format_double(c.fiber.refractive_index));
  add("detector.efficiency", format_double(c.detector.efficiency));
  add("detector.dark_prob", format_double(c.detector.dark_prob));
  add("detector.error_rate", format_double(c.detector.error_rate));
  add("timing.delta_cap_ns", std::to_string(c.delta_cap_ns));
  add("timing.epsilon_ns", std::to_string(c.epsilon_ns));
  add("timing.delta_ns", std::to_string(c.delta_ns));
  add("timing.delta_prime_ns", std::to_string(c.delta_prime_ns));
  add("source.mu", format_double(c.source.mu));
  add("source.statistics", c.source.statistics == SourceStatistics::Poisson
                               ? "poisson"
                               : "single_photon");
  add("session.n_target", std::to_string(c.session.n_target));
  add("session.eta_c", format_double(c.session.eta_c));
  add("session.eta_m", format_double(c.session.eta_m));
  add("session.variant", variant_name(c.session.variant));
  add("session.qber_abort_threshold",
      format_double(c.session.qber_abort_threshold));
  add("session.pulse_override", std::to_string(c.session.pulse_override));
  add("rates.storage_loop_km", format_double(resolved_storage_loop_km(c)));
  add("rates.f_cascade", format_double(c.f_cascade));
  add("run.master_seed", std::to_string(c.master_seed));
  add("run.output_dir", c.output_dir);
  out += "# derived: timing.tau_ns = " +
         std::to_string(timing_from(c).tau_ns) + "\n";
  out += "# derived: session.pulse_budget = " +
         std::to_string(pulse_budget(c.session)) + "\n";
  return out;
}

}  // namespace detbb84
