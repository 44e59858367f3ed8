#pragma once

// Run configuration shared by every subcommand. Parsing is strict: unknown
// keys and out-of-range values raise ConfigError naming the key.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirac/floquet.hpp"
#include "dirac/synth.hpp"
#include "dirac/verify.hpp"

namespace dirac {

using Json = nlohmann::ordered_json;

/// Growth bound for the growing-N schedule: scale ln(e + |x|) or scale (1 + |x|)^exponent.
struct HSpec {
  std::string kind = "log";  // "log" or "power"
  double scale = 1.0;
  double exponent = 0.5;  // power only

  std::function<double(double)> function() const;
  std::string name() const;
};

struct BandsConfig {
  double lambda_min = -4.0;
  double lambda_max = 4.0;
  double resolution = 0.01;
};

struct SynthConfig {
  std::string mode = "finite";  // "finite" or "growing"
  double decay_exponent = 100.0;
  double decay_margin = 5.0;
  double resonance_margin = 0.02;
  double a0 = 1e4;
  double x_max = 2e4;
  double b = 0.0;
  double taper_width = 1.0;
  double sample_spacing = 0.05;
  std::size_t max_samples = 20000;
  std::size_t stop_after_cycles = 0;
  std::size_t min_cycles_per_stage = 3;
  HSpec h;
  bool calibrate = true;
  // used when calibrate is false
  double growth = 2.0;
  double c_bound = 2.0;
  double K = 0.0;
};

struct CalibConfig {
  double a = 1e3;
  double probe_ratio = 1.05;
  double safety = 2.0;
  double stability_limit = 1.5;
  std::size_t phases = 8;
};

struct VerifyConfig {
  double slope_factor = 0.95;
  double rise_tolerance = 1e-6;
  double stability_limit = 2.0;
  std::size_t phases = 8;
  bool dual_path = true;
  double dual_tolerance = 1e-6;
};

struct DriftCase {
  double a = 1.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  Trig trig = Trig::sine;
};

struct OscConfig {
  std::vector<double> x0{1e2, 1e3, 1e4};
  double x_max = 1e6;
  double factor = 4.0;
  std::vector<DriftCase> drift_cases{{1.0, 1.0, 1.0, Trig::sine},
                                     {1.0, 2.0, 0.75, Trig::cosine},
                                     {2.0, 1.5, 1.0, Trig::sine}};
  std::vector<double> periodic_frequencies{0.5};
  bool control = true;
};

struct RunConfig {
  DiracCoefficients coefficients;
  std::vector<double> targets;
  IntegratorSpec integrator;
  FloquetOptions floquet;
  BandsConfig bands;
  SynthConfig synthesis;
  CalibConfig calibration;
  VerifyConfig verify;
  OscConfig oscillatory;
  std::string output_dir = "out";

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

/// Applies "a.b.c=value" overrides (value parsed as JSON, else as a string).
void apply_override(Json& j, const std::string& assignment);

// Option bundles derived from the configuration.
NonresonanceOptions nonresonance_options(const RunConfig& c);
ScheduleOptions schedule_options(const RunConfig& c);
CalibrationOptions calibration_options(const RunConfig& c);
VerifyOptions verify_options(const RunConfig& c);

}  // namespace dirac
