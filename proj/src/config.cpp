#include "dirac/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "dirac/error.hpp"
#include "json_section.hpp"

namespace dirac {
namespace {

using detail::Section;

PeriodicCoefficient read_coefficient(const Json& j, const std::string& path) {
  Section s(j, path);
  PeriodicCoefficient c;
  s.number("a0", c.a0);
  s.numbers("cos", c.cos_coeffs);
  s.numbers("sin", c.sin_coeffs);
  s.finish();
  return c;
}

Json write_coefficient(const PeriodicCoefficient& c) {
  return Json{{"a0", c.a0}, {"cos", c.cos_coeffs}, {"sin", c.sin_coeffs}};
}

const char* trig_name(Trig t) { return t == Trig::sine ? "sin" : "cos"; }

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError(fmt::format("{}: {}", key, what));
}

}  // namespace

std::function<double(double)> HSpec::function() const {
  if (kind == "log") {
    const double s = scale;
    return [s](double x) { return s * std::log(std::exp(1.0) + std::abs(x)); };
  }
  const double s = scale, e = exponent;
  return [s, e](double x) { return s * std::pow(1.0 + std::abs(x), e); };
}

std::string HSpec::name() const {
  if (kind == "log") return fmt::format("{:.17g} ln(e + |x|)", scale);
  return fmt::format("{:.17g} (1 + |x|)^{:.17g}", scale, exponent);
}

void RunConfig::validate() const {
  try {
    coefficients.validate();
  } catch (const ConfigError& e) {
    bad("coefficients", e.what());
  }
  try {
    integrator.validate();
  } catch (const ConfigError& e) {
    bad("integrator", e.what());
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i])) bad(fmt::format("targets[{}]", i), "must be finite");
  }
  if (floquet.grid_intervals < 16) bad("floquet.grid_intervals", "must be at least 16");
  if (!(floquet.edge_margin > 0.0 && floquet.edge_margin < 0.5 * std::acos(-1.0))) {
    bad("floquet.edge_margin", "must lie in (0, pi/2)");
  }
  if (!(bands.lambda_min < bands.lambda_max)) bad("bands.lambda_max", "must exceed bands.lambda_min");
  if (!(bands.resolution > 0.0 && bands.resolution <= bands.lambda_max - bands.lambda_min)) {
    bad("bands.resolution", "must lie in (0, lambda_max - lambda_min]");
  }

  const SynthConfig& s = synthesis;
  if (s.mode != "finite" && s.mode != "growing") bad("synthesis.mode", "must be \"finite\" or \"growing\"");
  if (!(s.decay_exponent > 0.0)) bad("synthesis.decay_exponent", "must be positive");
  if (!(s.decay_margin >= 0.0)) bad("synthesis.decay_margin", "must be non-negative");
  if (!(s.resonance_margin > 0.0)) bad("synthesis.resonance_margin", "must be positive");
  if (!(s.a0 > 0.0)) bad("synthesis.a0", "must be positive");
  if (!(s.x_max > s.a0)) bad("synthesis.x_max", "must exceed synthesis.a0");
  if (!(s.b < s.a0)) bad("synthesis.b", "must be below synthesis.a0");
  if (!(s.taper_width >= 0.0)) bad("synthesis.taper_width", "must be non-negative");
  if (!(s.sample_spacing > 0.0)) bad("synthesis.sample_spacing", "must be positive");
  if (s.max_samples < 2) bad("synthesis.max_samples", "must be at least 2");
  if (s.min_cycles_per_stage < 1) bad("synthesis.min_cycles_per_stage", "must be at least 1");
  if (s.h.kind != "log" && s.h.kind != "power") bad("synthesis.h.kind", "must be \"log\" or \"power\"");
  if (!(s.h.scale > 0.0)) bad("synthesis.h.scale", "must be positive");
  if (!(s.h.exponent > 0.0)) bad("synthesis.h.exponent", "must be positive");
  if (!(s.growth >= 1.0)) bad("synthesis.growth", "must be at least 1");
  if (!(s.c_bound > 0.0)) bad("synthesis.c_bound", "must be positive");
  if (!(s.K >= 0.0)) bad("synthesis.K", "must be non-negative");

  if (!(calibration.a > 0.0)) bad("calibration.a", "must be positive");
  if (!(calibration.probe_ratio > 1.0)) bad("calibration.probe_ratio", "must exceed 1");
  if (!(calibration.safety >= 1.0)) bad("calibration.safety", "must be at least 1");
  if (!(calibration.stability_limit > 1.0)) bad("calibration.stability_limit", "must exceed 1");
  if (calibration.phases < 1) bad("calibration.phases", "must be at least 1");

  if (!(verify.slope_factor > 0.0 && verify.slope_factor <= 1.0)) bad("verify.slope_factor", "must lie in (0, 1]");
  if (!(verify.rise_tolerance >= 0.0)) bad("verify.rise_tolerance", "must be non-negative");
  if (!(verify.stability_limit >= 1.0)) bad("verify.stability_limit", "must be at least 1");
  if (verify.phases < 1) bad("verify.phases", "must be at least 1");
  if (!(verify.dual_tolerance > 0.0)) bad("verify.dual_tolerance", "must be positive");

  const OscConfig& o = oscillatory;
  if (o.x0.empty()) bad("oscillatory.x0", "must not be empty");
  for (std::size_t i = 0; i < o.x0.size(); ++i) {
    if (!(o.x0[i] > 0.0 && o.x0[i] < o.x_max)) bad(fmt::format("oscillatory.x0[{}]", i), "must lie in (0, x_max)");
  }
  if (!(o.factor > 1.0)) bad("oscillatory.factor", "must exceed 1");
  if (output_dir.empty()) bad("output_dir", "must not be empty");
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  Section root(j, "");
  if (const Json* co = root.object("coefficients")) {
    Section s(*co, "coefficients");
    if (const Json* p = s.object("p")) c.coefficients.p = read_coefficient(*p, "coefficients.p");
    if (const Json* q = s.object("q")) c.coefficients.q = read_coefficient(*q, "coefficients.q");
    s.finish();
  }
  root.numbers("targets", c.targets);
  if (const Json* v = root.object("integrator")) {
    Section s(*v, "integrator");
    s.number("rel_tol", c.integrator.rel_tol);
    s.number("abs_tol", c.integrator.abs_tol);
    s.number("max_step", c.integrator.max_step);
    s.number("dense_output_stride", c.integrator.dense_output_stride);
    s.finish();
  }
  if (const Json* v = root.object("floquet")) {
    Section s(*v, "floquet");
    s.count("grid_intervals", c.floquet.grid_intervals);
    s.number("edge_margin", c.floquet.edge_margin);
    s.finish();
  }
  if (const Json* v = root.object("bands")) {
    Section s(*v, "bands");
    s.number("lambda_min", c.bands.lambda_min);
    s.number("lambda_max", c.bands.lambda_max);
    s.number("resolution", c.bands.resolution);
    s.finish();
  }
  if (const Json* v = root.object("synthesis")) {
    Section s(*v, "synthesis");
    SynthConfig& y = c.synthesis;
    s.string("mode", y.mode);
    s.number("decay_exponent", y.decay_exponent);
    s.number("decay_margin", y.decay_margin);
    s.number("resonance_margin", y.resonance_margin);
    s.number("a0", y.a0);
    s.number("x_max", y.x_max);
    s.number("b", y.b);
    s.number("taper_width", y.taper_width);
    s.number("sample_spacing", y.sample_spacing);
    s.count("max_samples", y.max_samples);
    s.count("stop_after_cycles", y.stop_after_cycles);
    s.count("min_cycles_per_stage", y.min_cycles_per_stage);
    if (const Json* h = s.object("h")) {
      Section hs(*h, "synthesis.h");
      hs.string("kind", y.h.kind);
      hs.number("scale", y.h.scale);
      hs.number("exponent", y.h.exponent);
      hs.finish();
    }
    s.boolean("calibrate", y.calibrate);
    s.number("growth", y.growth);
    s.number("c_bound", y.c_bound);
    s.number("K", y.K);
    s.finish();
  }
  if (const Json* v = root.object("calibration")) {
    Section s(*v, "calibration");
    s.number("a", c.calibration.a);
    s.number("probe_ratio", c.calibration.probe_ratio);
    s.number("safety", c.calibration.safety);
    s.number("stability_limit", c.calibration.stability_limit);
    s.count("phases", c.calibration.phases);
    s.finish();
  }
  if (const Json* v = root.object("verify")) {
    Section s(*v, "verify");
    s.number("slope_factor", c.verify.slope_factor);
    s.number("rise_tolerance", c.verify.rise_tolerance);
    s.number("stability_limit", c.verify.stability_limit);
    s.count("phases", c.verify.phases);
    s.boolean("dual_path", c.verify.dual_path);
    s.number("dual_tolerance", c.verify.dual_tolerance);
    s.finish();
  }
  if (const Json* v = root.object("oscillatory")) {
    Section s(*v, "oscillatory");
    OscConfig& o = c.oscillatory;
    s.numbers("x0", o.x0);
    s.number("x_max", o.x_max);
    s.number("factor", o.factor);
    if (const Json* cases = s.object("drift_cases")) {
      if (!cases->is_array()) bad("oscillatory.drift_cases", "expected an array of objects");
      o.drift_cases.clear();
      for (std::size_t i = 0; i < cases->size(); ++i) {
        const std::string path = fmt::format("oscillatory.drift_cases[{}]", i);
        Section cs((*cases)[i], path);
        DriftCase k;
        cs.number("a", k.a);
        cs.number("beta1", k.beta1);
        cs.number("beta2", k.beta2);
        std::string trig = "sin";
        cs.string("trig", trig);
        if (trig != "sin" && trig != "cos") bad(path + ".trig", "must be \"sin\" or \"cos\"");
        k.trig = trig == "sin" ? Trig::sine : Trig::cosine;
        cs.finish();
        o.drift_cases.push_back(k);
      }
    }
    s.numbers("periodic_frequencies", o.periodic_frequencies);
    s.boolean("control", o.control);
    s.finish();
  }
  root.string("output_dir", c.output_dir);
  root.finish();
  c.validate();
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["coefficients"] = {{"p", write_coefficient(c.coefficients.p)},
                       {"q", write_coefficient(c.coefficients.q)}};
  j["targets"] = c.targets;
  j["integrator"] = {{"rel_tol", c.integrator.rel_tol},
                     {"abs_tol", c.integrator.abs_tol},
                     {"max_step", c.integrator.max_step},
                     {"dense_output_stride", c.integrator.dense_output_stride}};
  j["floquet"] = {{"grid_intervals", c.floquet.grid_intervals},
                  {"edge_margin", c.floquet.edge_margin}};
  j["bands"] = {{"lambda_min", c.bands.lambda_min},
                {"lambda_max", c.bands.lambda_max},
                {"resolution", c.bands.resolution}};
  const SynthConfig& y = c.synthesis;
  j["synthesis"] = {{"mode", y.mode},
                    {"decay_exponent", y.decay_exponent},
                    {"decay_margin", y.decay_margin},
                    {"resonance_margin", y.resonance_margin},
                    {"a0", y.a0},
                    {"x_max", y.x_max},
                    {"b", y.b},
                    {"taper_width", y.taper_width},
                    {"sample_spacing", y.sample_spacing},
                    {"max_samples", y.max_samples},
                    {"stop_after_cycles", y.stop_after_cycles},
                    {"min_cycles_per_stage", y.min_cycles_per_stage},
                    {"h", {{"kind", y.h.kind}, {"scale", y.h.scale}, {"exponent", y.h.exponent}}},
                    {"calibrate", y.calibrate},
                    {"growth", y.growth},
                    {"c_bound", y.c_bound},
                    {"K", y.K}};
  j["calibration"] = {{"a", c.calibration.a},
                      {"probe_ratio", c.calibration.probe_ratio},
                      {"safety", c.calibration.safety},
                      {"stability_limit", c.calibration.stability_limit},
                      {"phases", c.calibration.phases}};
  j["verify"] = {{"slope_factor", c.verify.slope_factor},
                 {"rise_tolerance", c.verify.rise_tolerance},
                 {"stability_limit", c.verify.stability_limit},
                 {"phases", c.verify.phases},
                 {"dual_path", c.verify.dual_path},
                 {"dual_tolerance", c.verify.dual_tolerance}};
  Json cases = Json::array();
  for (const DriftCase& k : c.oscillatory.drift_cases) {
    cases.push_back({{"a", k.a}, {"beta1", k.beta1}, {"beta2", k.beta2}, {"trig", trig_name(k.trig)}});
  }
  j["oscillatory"] = {{"x0", c.oscillatory.x0},
                      {"x_max", c.oscillatory.x_max},
                      {"factor", c.oscillatory.factor},
                      {"drift_cases", cases},
                      {"periodic_frequencies", c.oscillatory.periodic_frequencies},
                      {"control", c.oscillatory.control}};
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", path, e.what()));
  }
  return config_from_json(j);
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(fmt::format("override key '{}' has an empty component", key));
    if (node->is_null()) *node = Json::object();
    if (!node->is_object()) throw ConfigError(fmt::format("override key '{}' descends into a non-object", key));
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const Json value = Json::parse(text, nullptr, false);
  *node = value.is_discarded() ? Json(text) : value;
}

NonresonanceOptions nonresonance_options(const RunConfig& c) {
  NonresonanceOptions o;
  o.margin = c.synthesis.resonance_margin;
  o.decay_exponent = c.synthesis.decay_exponent;
  o.decay_margin = c.synthesis.decay_margin;
  o.floquet = c.floquet;
  return o;
}

ScheduleOptions schedule_options(const RunConfig& c) {
  const SynthConfig& y = c.synthesis;
  ScheduleOptions o;
  o.mode = y.mode == "growing" ? ScheduleMode::growing : ScheduleMode::finite;
  o.a0 = y.a0;
  o.x_max = y.x_max;
  o.b = y.b;
  o.decay_exponent = y.decay_exponent;
  o.growth = y.growth;
  o.taper_width = y.taper_width;
  o.sample_spacing = y.sample_spacing;
  o.max_samples = y.max_samples;
  o.stop_after_cycles = y.stop_after_cycles;
  o.min_cycles_per_stage = y.min_cycles_per_stage;
  if (o.mode == ScheduleMode::growing) {
    o.h = y.h.function();
    o.h_name = y.h.name();
  }
  return o;
}

CalibrationOptions calibration_options(const RunConfig& c) {
  CalibrationOptions o;
  o.a = c.calibration.a;
  o.b = c.synthesis.b;
  o.probe_ratio = c.calibration.probe_ratio;
  o.decay_exponent = c.synthesis.decay_exponent;
  o.safety = c.calibration.safety;
  o.stability_limit = c.calibration.stability_limit;
  o.taper_width = c.synthesis.taper_width;
  o.phases = c.calibration.phases;
  return o;
}

VerifyOptions verify_options(const RunConfig& c) {
  VerifyOptions o;
  o.decay.decay_exponent = c.synthesis.decay_exponent;
  o.decay.slope_factor = c.verify.slope_factor;
  o.decay.safety = c.calibration.safety;
  o.decay.rise_tolerance = c.verify.rise_tolerance;
  o.decay.dual_path = c.verify.dual_path;
  o.decay.dual_tolerance = c.verify.dual_tolerance;
  o.stability.phases = c.verify.phases;
  o.stability.limit = c.verify.stability_limit;
  o.stability.dual_path = c.verify.dual_path;
  o.stability.dual_tolerance = c.verify.dual_tolerance;
  return o;
}

}  // namespace dirac
