#include "dirac/commands.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dirac/error.hpp"
#include "dirac/io.hpp"

namespace dirac {
namespace {

std::string out_path(const RunConfig& c, const char* name) { return c.output_dir + "/" + name; }

template <class Writer>
void write_csv(const std::string& path, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_file(path, os.str());
}

const char* failure_kind(const std::string& check) {
  if (check == "decay") return "DecayTooSlow";
  if (check == "stability") return "StabilityViolated";
  if (check == "l2_tail") return "InconclusiveTail";
  return "BoundViolated";
}

int finish_checks(const RunConfig& config, const std::vector<CheckRecord>& checks,
                  const char* json_name, const char* csv_name, std::ostream& log) {
  write_file(out_path(config, json_name), dump(reports_json(checks)));
  write_csv(out_path(config, csv_name), [&](std::ostream& os) { write_summary_csv(os, checks); });
  std::size_t failed = 0;
  for (const CheckRecord& c : checks) {
    if (c.passed) continue;
    ++failed;
    fmt::print(log, "FAILED {} [{}] {}: {}\n", c.name, c.subject, failure_kind(c.name), c.message);
  }
  fmt::print(log, "{} checks, {} failed\n", checks.size(), failed);
  return failed == 0 ? exit_pass : exit_check_failed;
}

}  // namespace

int cmd_bands(const RunConfig& config, std::ostream& log) {
  const BandStructure bs = band_scan(config.coefficients, config.bands.lambda_min,
                                     config.bands.lambda_max, config.bands.resolution,
                                     config.integrator);
  write_csv(out_path(config, "bands.csv"), [&](std::ostream& os) { write_bands_csv(os, bs); });
  write_file(out_path(config, "band_edges.json"), dump(band_edges_json(bs)));
  fmt::print(log, "{} bands, {} interior edges in [{}, {}]\n", bs.bands.size(), bs.edges().size(),
             config.bands.lambda_min, config.bands.lambda_max);
  return exit_pass;
}

int cmd_floquet(const RunConfig& config, double lambda, std::ostream& log) {
  const auto frame = make_frame(config.coefficients, lambda, config.integrator, config.floquet);
  write_csv(out_path(config, "floquet.csv"), [&](std::ostream& os) { write_period_csv(os, *frame); });
  write_file(out_path(config, "floquet.json"), dump(floquet_json(*frame)));
  fmt::print(log, "lambda = {}: k = {:.12g}, omega = {:.12g}, mean Psi = {:.12g}\n", lambda,
             frame->k(), frame->omega(), frame->psi_mean());
  return exit_pass;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  if (config.targets.empty()) throw ConfigError("targets: at least one eigenvalue is required");
  std::vector<EmbeddingTarget> targets = check_nonresonance(
      config.targets, config.coefficients, config.integrator, nonresonance_options(config));
  ScheduleOptions opt = schedule_options(config);
  if (config.synthesis.calibrate) {
    const CalibrationReport cal = calibrate_targets(targets, config.integrator, calibration_options(config));
    opt.growth = std::max(1.0, cal.growth);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      fmt::print(log, "lambda = {}: C = {:.6g}, C_bound = {:.6g}, K = {:.6g}\n", targets[i].lambda,
                 targets[i].C, cal.c_bound[i], cal.K[i]);
    }
    fmt::print(log, "bystander growth per piece: {:.6g}\n", opt.growth);
  } else {
    for (EmbeddingTarget& t : targets) {
      t.c_bound = config.synthesis.c_bound;
      t.K = config.synthesis.K;
    }
  }
  const SynthesisSchedule s = schedule(targets, opt, config.integrator);
  const SynthesizedPotential v = assemble(s, config.integrator);
  write_csv(out_path(config, "potential.csv"), [&](std::ostream& os) { write_potential_csv(os, v.pieces()); });
  write_csv(out_path(config, "schedule.csv"), [&](std::ostream& os) { write_schedule_csv(os, s); });
  write_file(out_path(config, "manifest.json"), dump(manifest_json(config, s)));
  fmt::print(log, "{} steps on each side, |x| in [{:.6g}, {:.6g}]\n", s.owner.size(), s.T.front(),
             s.T.back());
  return exit_pass;
}

int cmd_verify(const RunConfig& config, const std::string& manifest_path, std::ostream& log) {
  const Manifest m = load_manifest(manifest_path);
  const ScheduleVerification v = verify_schedule(m.schedule, m.config.integrator, verify_options(config));
  return finish_checks(config, records(v), "reports.json", "summary.csv", log);
}

int cmd_oscillatory(const RunConfig& config, std::ostream& log) {
  const OscConfig& o = config.oscillatory;
  std::vector<CheckRecord> checks;
  for (const DriftCase& k : o.drift_cases) {
    checks.push_back(record(drift_check(k.a, k.beta1, k.beta2, o.x0, o.x_max, k.trig, o.factor)));
  }
  const auto Gamma = [](double t) { return 1.0 + std::cos(2.0 * std::numbers::pi * t); };
  for (double a : o.periodic_frequencies) {
    checks.push_back(record(periodic_check(
        Gamma, [](double t) { return 0.3 * std::sin(2.0 * std::numbers::pi * t); }, a, o.x0,
        o.x_max, "Gamma = 1 + cos 2 pi t, gamma = 0.3 sin 2 pi t", false, o.factor)));
    for (double lambda : config.targets) {
      const auto frame = make_frame(config.coefficients, lambda, config.integrator, config.floquet);
      checks.push_back(record(periodic_check(*frame, a, o.x0, o.x_max, o.factor)));
    }
  }
  if (o.control) {
    checks.push_back(record(periodic_check(
        Gamma, [](double) { return 0.0; }, 2.0 * std::numbers::pi, o.x0, o.x_max,
        "resonant control: Gamma = 1 + cos 2 pi t, gamma = 0", true, o.factor)));
  }
  return finish_checks(config, checks, "oscillatory.json", "oscillatory.csv", log);
}

int run_guarded(const std::function<int()>& body, std::ostream& log) {
  try {
    return body();
  } catch (const ResonantPair& e) {
    fmt::print(log, "error: resonant pair ({}, {}): {}\n", e.first, e.second, e.what());
    return exit_resonance;
  } catch (const ResonantFrequency& e) {
    fmt::print(log, "error: {}\n", e.what());
    return exit_resonance;
  } catch (const ScanTooCoarse& e) {
    fmt::print(log, "error: {} (set a smaller bands.resolution)\n", e.what());
    return exit_usage;
  } catch (const DecayTooSlow& e) {
    fmt::print(log, "check failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const StabilityViolated& e) {
    fmt::print(log, "check failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const BoundViolated& e) {
    fmt::print(log, "check failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const InconclusiveTail& e) {
    fmt::print(log, "check failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const StepSizeUnderflow& e) {
    fmt::print(log, "integration failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const NonFiniteState& e) {
    fmt::print(log, "integration failed: {}\n", e.what());
    return exit_check_failed;
  } catch (const Error& e) {
    // configuration-level problems: gap energies, band edges, horizons, envelopes
    fmt::print(log, "error: {}\n", e.what());
    return exit_usage;
  } catch (const std::exception& e) {
    fmt::print(log, "error: {}\n", e.what());
    return exit_check_failed;
  }
}

}  // namespace dirac
