// Command-line front end: analytic rate curves, crossover search, and full
// protocol session simulation with deterministic replay.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detbb84/config.hpp"
#include "detbb84/protocol.hpp"
#include "detbb84/rates.hpp"
#include "detbb84/rng.hpp"

namespace {

namespace fs = std::filesystem;
using namespace detbb84;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file '" + path.string() + "'");
  }
  out << content;
}

// Every run leaves the exact parameters it used beside its outputs.
fs::path prepare_output_dir(const AppConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_file(dir / "resolved_config.txt", serialize_config(cfg));
  return dir;
}

struct SweepSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

SweepSpec parse_sweep(const std::string& text) {
  SweepSpec s;
  char tail = 0;
  const int n =
      std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &s.lo, &s.hi, &s.step, &tail);
  if (n != 3) {
    throw ConfigError("--sweep expects lo:hi:step, got '" + text + "'");
  }
  if (s.step <= 0.0 || s.hi < s.lo || s.lo < 0.0) {
    throw ConfigError("--sweep needs 0 <= lo <= hi and step > 0");
  }
  return s;
}

std::string format_rate_table(const RateCurve& bb84, const RateCurve& det) {
  std::ostringstream out;
  char line[160];
  out << "variant  distance_km     mu_opt          rate\n";
  for (const RateCurve* curve : {&bb84, &det}) {
    for (const RatePoint& p : curve->points) {
      std::snprintf(line, sizeof(line), "%-7s  %-14.6g  %-14.6g  %.6g\n",
                    rate_variant_name(p.variant), p.distance_km, p.mu_opt,
                    p.rate);
      out << line;
    }
  }
  return out.str();
}

int run_rates(const AppConfig& cfg, double distance, bool have_sweep,
              const SweepSpec& sweep_spec, const std::string& variant_sel) {
  const fs::path dir = prepare_output_dir(cfg);
  const RateParams params = to_rate_params(cfg);
  const bool want_bb84 = variant_sel != "det";
  const bool want_det = variant_sel != "bb84";

  RateCurve bb84;
  RateCurve det;
  std::vector<std::pair<RateVariant, double>> dead;
  if (have_sweep) {
    SweepResult swept =
        sweep(params, sweep_spec.lo, sweep_spec.hi, sweep_spec.step);
    bb84 = std::move(swept.bb84);
    det = std::move(swept.det);
    dead = std::move(swept.no_secure_rate);
    if (!want_bb84) bb84.points.clear();
    if (!want_det) det.points.clear();
  } else {
    for (const RateVariant v : {RateVariant::BB84, RateVariant::Det}) {
      if ((v == RateVariant::BB84 && !want_bb84) ||
          (v == RateVariant::Det && !want_det)) {
        continue;
      }
      const OptimizeResult opt = optimize_mu(params, distance, v);
      if (!opt.found) {
        dead.emplace_back(v, distance);
        continue;
      }
      RatePoint p;
      p.distance_km = distance;
      p.mu_opt = opt.mu_opt;
      p.rate = opt.rate_opt;
      p.variant = v;
      (v == RateVariant::BB84 ? bb84 : det).points.push_back(p);
    }
  }

  write_file(dir / "rates.csv", curve_to_csv(bb84, det));
  std::cout << format_rate_table(bb84, det);
  for (const auto& [variant, length] : dead) {
    if ((variant == RateVariant::BB84 && !want_bb84) ||
        (variant == RateVariant::Det && !want_det)) {
      continue;
    }
    std::cout << "no secure rate: " << rate_variant_name(variant) << " at "
              << length << " km\n";
  }
  if (!have_sweep && bb84.points.size() == 1 && det.points.size() == 1) {
    char line[96];
    std::snprintf(line, sizeof(line), "det/bb84 rate ratio = %.4f\n",
                  det.points[0].rate / bb84.points[0].rate);
    std::cout << line;
  }
  std::cout << "wrote " << (dir / "rates.csv").string() << "\n";
  return 0;
}

int run_crossover(const AppConfig& cfg, double lo, double hi) {
  const fs::path dir = prepare_output_dir(cfg);
  const RateParams params = to_rate_params(cfg);

  // Ratio curve on a coarse grid alongside the refined crossover point.
  std::string csv = "distance_km,rate_det,rate_bb84,ratio\n";
  char line[160];
  const double step = 0.5;
  for (double length = lo; length <= hi + 1e-9; length += step) {
    const OptimizeResult det = optimize_mu(params, length, RateVariant::Det);
    const OptimizeResult bb84 = optimize_mu(params, length, RateVariant::BB84);
    if (!det.found || !bb84.found || bb84.rate_opt <= 0.0) continue;
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", length,
                  det.rate_opt, bb84.rate_opt, det.rate_opt / bb84.rate_opt);
    csv += line;
  }
  write_file(dir / "ratio_curve.csv", csv);

  const CrossoverResult result = crossover_distance(params, lo, hi);
  if (result.found) {
    std::snprintf(line, sizeof(line), "crossover_distance = %.2f km\n",
                  result.distance_km);
    std::cout << line;
  } else {
    std::snprintf(line, sizeof(line), "no crossover in [%.6g, %.6g] km\n", lo,
                  hi);
    std::cout << line;
  }
  std::cout << "wrote " << (dir / "ratio_curve.csv").string() << "\n";
  return 0;
}

int run_simulate(const AppConfig& cfg, const AttackStrategy& attack) {
  const fs::path dir = prepare_output_dir(cfg);
  Rng rng(cfg.master_seed);
  const SessionTranscript t =
      run_session(cfg.session, cfg.fiber, detector_from(cfg), timing_from(cfg),
                  cfg.source, attack, rng);

  {
    std::ofstream out(dir / "transcript.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write transcript.txt");
    write_transcript(out, t);
  }

  std::cout << "variant = " << variant_name(t.variant) << "\n";
  std::cout << "pulses_sent = " << t.pulses_sent << "\n";
  std::cout << "clicks = " << t.clicks << "\n";
  std::cout << "sifted_bits = " << t.sifted_alice.size() << "\n";
  std::cout << "check_bits = " << t.check_indices.size() << "\n";
  if (t.qber_measured) {
    char line[64];
    std::snprintf(line, sizeof(line), "measured_qber = %.6g\n",
                  t.measured_qber);
    std::cout << line;
  } else {
    std::cout << "measured_qber = -\n";
  }
  std::cout << "abort = " << abort_reason_name(t.abort) << "\n";
  if (t.beta_estimated) {
    char line[64];
    std::snprintf(line, sizeof(line), "beta_estimate = %.6g\n",
                  t.beta_estimate);
    std::cout << line;
  }
  std::cout << "leaked_bits = " << t.leaked_bits << "\n";
  std::cout << "final_key_bits = "
            << (t.final_key_alice ? t.final_key_alice->size() : 0) << "\n";
  std::cout << "wrote " << (dir / "transcript.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic-basis BB84 simulator and rate toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "configuration file (key = value)");
  auto* output_opt =
      app.add_option("--output-dir", output_dir, "directory for output files");
  app.add_option("--seed", seed, "master seed override")
      ->each([&have_seed](const std::string&) { have_seed = true; });

  CLI::App* rates_cmd =
      app.add_subcommand("rates", "mu-optimized secure key rates");
  double distance = -1.0;
  std::string sweep_text;
  std::string rate_variant = "both";
  auto* distance_opt = rates_cmd->add_option(
      "--distance", distance, "single fiber length in km");
  auto* sweep_opt = rates_cmd->add_option("--sweep", sweep_text,
                                          "distance grid lo:hi:step in km");
  distance_opt->excludes(sweep_opt);
  rates_cmd
      ->add_option("--variant", rate_variant, "bb84, det, or both")
      ->check(CLI::IsMember({"bb84", "det", "both"}));

  CLI::App* crossover_cmd = app.add_subcommand(
      "crossover", "distance where the det rate falls below bb84");
  double cross_lo = 1.0;
  double cross_hi = 20.0;
  crossover_cmd->add_option("--lo", cross_lo, "bracket start in km");
  crossover_cmd->add_option("--hi", cross_hi, "bracket end in km");

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "run one full protocol session");
  std::string sim_variant;
  std::int64_t pulses = 0;
  std::string attack_name = "none";
  double attack_fraction = 1.0;
  simulate_cmd
      ->add_option("--variant", sim_variant,
                   "bb84, det_basic, or det_practical")
      ->check(CLI::IsMember({"bb84", "det_basic", "det_practical"}));
  simulate_cmd->add_option("--pulses", pulses,
                           "send exactly this many pulses")
      ->check(CLI::PositiveNumber);
  simulate_cmd
      ->add_option("--attack", attack_name, "none, intercept_resend, or delay")
      ->check(CLI::IsMember({"none", "ir", "intercept_resend", "delay",
                             "delay_for_basis"}));
  simulate_cmd->add_option("--attack-fraction", attack_fraction,
                           "fraction of pulses attacked")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    AppConfig cfg =
        config_path.empty() ? AppConfig{} : load_config(config_path);
    if (output_opt->count() > 0) cfg.output_dir = output_dir;
    if (have_seed) cfg.master_seed = seed;

    if (app.got_subcommand(rates_cmd)) {
      const bool have_sweep = sweep_opt->count() > 0;
      SweepSpec spec;
      if (have_sweep) spec = parse_sweep(sweep_text);
      if (distance_opt->count() == 0) distance = cfg.fiber.length_km;
      if (!have_sweep && distance < 0.0) {
        throw ConfigError("--distance must be >= 0");
      }
      validate(cfg);
      return run_rates(cfg, distance, have_sweep, spec, rate_variant);
    }
    if (app.got_subcommand(crossover_cmd)) {
      if (cross_hi <= cross_lo) throw ConfigError("crossover needs --hi > --lo");
      validate(cfg);
      return run_crossover(cfg, cross_lo, cross_hi);
    }
    // simulate
    if (!sim_variant.empty()) {
      if (sim_variant == "bb84") {
        cfg.session.variant = Variant::BB84;
      } else if (sim_variant == "det_basic") {
        cfg.session.variant = Variant::DetBasic;
      } else {
        cfg.session.variant = Variant::DetPractical;
      }
    }
    if (pulses > 0) cfg.session.pulse_override = pulses;
    AttackStrategy attack;
    if (attack_name == "ir" || attack_name == "intercept_resend") {
      attack.kind = AttackKind::InterceptResend;
    } else if (attack_name == "delay" || attack_name == "delay_for_basis") {
      attack.kind = AttackKind::DelayForBasis;
    }
    attack.fraction = attack_fraction;
    validate(cfg);
    return run_simulate(cfg, attack);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
