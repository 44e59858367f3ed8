#include "dirac/io.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "dirac/error.hpp"
#include "json_section.hpp"

namespace dirac {
namespace {

using detail::Section;

constexpr const char* kManifestFormat = "dirac-embed-manifest/1";

void write_buffer(std::ostream& os, const fmt::memory_buffer& buf) {
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Side parse_side(const std::string& s, const std::string& key) {
  if (s == "plus") return Side::plus;
  if (s == "minus") return Side::minus;
  throw ConfigError(fmt::format("{}: must be \"plus\" or \"minus\"", key));
}

}  // namespace

void write_bands_csv(std::ostream& os, const BandStructure& bs) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "lambda,trace,k\n");
  for (std::size_t i = 0; i < bs.lambdas.size(); ++i) {
    const double half = 0.5 * bs.traces[i];
    const double k = std::abs(half) <= 1.0 ? std::acos(half) : std::numeric_limits<double>::quiet_NaN();
    fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g},{:.17g}\n", bs.lambdas[i], bs.traces[i], k);
  }
  write_buffer(os, buf);
}

Json band_edges_json(const BandStructure& bs) {
  Json bands = Json::array();
  for (const Band& b : bs.bands) {
    bands.push_back({{"lower", b.a},
                     {"upper", b.b},
                     {"k_direction", b.k_direction},
                     {"lower_is_edge", b.lower_is_edge},
                     {"upper_is_edge", b.upper_is_edge}});
  }
  return Json{{"scan", {{"lambda_min", bs.scan_range.first},
                        {"lambda_max", bs.scan_range.second},
                        {"resolution", bs.resolution}}},
              {"edges", bs.edges()},
              {"bands", bands}};
}

void write_period_csv(std::ostream& os, const FloquetFrame& frame) {
  const FloquetSolution& s = frame.solution();
  const DerivedPeriodicData& d = frame.data();
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "x,re_g1,im_g1,re_g2,im_g2,abs_g1,abs_g2,gamma1,gamma2,Gamma1,Psi,Gamma2,delta\n");
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    fmt::format_to(out,
                   "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
                   "{:.17g},{:.17g},{:.17g}\n",
                   d.x[i], s.g1[i].real(), s.g1[i].imag(), s.g2[i].real(), s.g2[i].imag(), d.abs_g1[i],
                   d.abs_g2[i], d.gamma1[i], d.gamma2[i], d.Gamma1[i], d.Psi[i], d.Gamma2[i],
                   d.delta[i]);
  }
  write_buffer(os, buf);
}

Json floquet_json(const FloquetFrame& frame) {
  const FloquetSolution& s = frame.solution();
  return Json{{"lambda", s.lambda},          {"k", s.k},
              {"exponent", s.exponent},      {"omega", s.omega},
              {"psi_mean", frame.psi_mean()}, {"max_norm2", frame.max_norm2()},
              {"intervals", s.intervals},    {"normalization", s.normalization}};
}

void write_potential_csv(std::ostream& os, const std::vector<PotentialPiece>& pieces) {
  std::vector<std::pair<double, double>> rows;
  for (const PotentialPiece& p : pieces) {
    for (std::size_t i = 0; i < p.x_grid.size(); ++i) rows.emplace_back(p.x_grid[i], p.V_grid[i]);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "x,V\n");
  for (const auto& [x, v] : rows) fmt::format_to(std::back_inserter(buf), "{:.17g},{:.17g}\n", x, v);
  write_buffer(os, buf);
}

void write_schedule_csv(std::ostream& os, const SynthesisSchedule& s) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "step,T_start,T_end,N,owner,lambda\n");
  for (std::size_t r = 0; r < s.owner.size(); ++r) {
    fmt::format_to(std::back_inserter(buf), "{},{:.17g},{:.17g},{},{},{:.17g}\n", r, s.T[r],
                   s.T[r + 1], s.N[r], s.owner[r], s.targets[s.owner[r]].lambda);
  }
  write_buffer(os, buf);
}

Json manifest_json(const RunConfig& config, const SynthesisSchedule& s) {
  Json targets = Json::array();
  for (const EmbeddingTarget& t : s.targets) {
    targets.push_back({{"lambda", t.lambda},
                       {"k", t.k},
                       {"omega", t.omega},
                       {"C", t.C},
                       {"c_bound", t.c_bound},
                       {"K", t.K}});
  }
  Json pieces = Json::array();
  for (std::size_t i = 0; i < s.pieces.size(); ++i) {
    const PotentialPiece& p = s.pieces[i];
    pieces.push_back({{"step", i / 2},
                      {"side", side_name(p.side)},
                      {"target", p.target},
                      {"lambda", p.lambda},
                      {"a", p.a},
                      {"b", p.b},
                      {"x_end", p.x_end},
                      {"xi0", p.xi0},
                      {"C", p.C},
                      {"taper_width", p.taper_width},
                      {"active", p.active},
                      {"samples", p.x_grid.size()}});
  }
  const ScheduleOptions& o = s.options;
  Json j;
  j["format"] = kManifestFormat;
  j["config"] = config_to_json(config);
  j["config"].erase("output_dir");  // where it was written is not part of the run
  j["targets"] = targets;
  j["schedule"] = {{"mode", o.mode == ScheduleMode::growing ? "growing" : "finite"},
                   {"a0", o.a0},
                   {"b", o.b},
                   {"x_max", o.x_max},
                   {"decay_exponent", o.decay_exponent},
                   {"growth", o.growth},
                   {"h", o.h_name},
                   {"T", s.T},
                   {"N", s.N},
                   {"owner", s.owner}};
  j["sampling"] = {{"sample_spacing", o.sample_spacing}, {"max_samples", o.max_samples}};
  j["pieces"] = pieces;
  return j;
}

Manifest manifest_from_json(const Json& j) {
  Section root(j, "manifest");
  std::string format;
  root.string("format", format);
  if (format != kManifestFormat) {
    throw ConfigError(fmt::format("manifest.format: expected \"{}\", got \"{}\"", kManifestFormat, format));
  }
  const Json* cfg = root.object("config");
  if (!cfg) throw ConfigError("manifest.config: missing");
  Manifest m;
  m.config = config_from_json(*cfg);
  const RunConfig& c = m.config;

  std::vector<EmbeddingTarget> targets =
      check_nonresonance(c.targets, c.coefficients, c.integrator, nonresonance_options(c));
  const Json* tj = root.object("targets");
  if (!tj || !tj->is_array() || tj->size() != targets.size()) {
    throw ConfigError("manifest.targets: expected one entry per configured target");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Section ts((*tj)[i], fmt::format("manifest.targets[{}]", i));
    double lambda = 0.0, k = 0.0, omega = 0.0;
    ts.number("lambda", lambda);
    ts.number("k", k);
    ts.number("omega", omega);
    ts.number("C", targets[i].C);
    ts.number("c_bound", targets[i].c_bound);
    ts.number("K", targets[i].K);
    ts.finish();
    if (lambda != targets[i].lambda) {
      throw ConfigError(fmt::format("manifest.targets[{}].lambda: {} does not match the config", i, lambda));
    }
  }

  SynthesisSchedule& s = m.schedule;
  s.targets = targets;
  s.options = schedule_options(c);
  if (const Json* sj = root.object("schedule")) {
    Section ss(*sj, "manifest.schedule");
    std::string mode, h;
    ss.string("mode", mode);
    ss.number("a0", s.options.a0);
    ss.number("b", s.options.b);
    ss.number("x_max", s.options.x_max);
    ss.number("decay_exponent", s.options.decay_exponent);
    ss.number("growth", s.options.growth);
    ss.string("h", h);
    std::vector<double> T;
    ss.numbers("T", T);
    s.T = T;
    for (const char* key : {"N", "owner"}) {
      const Json* v = ss.object(key);
      if (!v || !v->is_array()) throw ConfigError(fmt::format("manifest.schedule.{}: expected an array", key));
      auto& dst = std::string(key) == "N" ? s.N : s.owner;
      for (const Json& e : *v) {
        if (!e.is_number_unsigned()) {
          throw ConfigError(fmt::format("manifest.schedule.{}: expected non-negative integers", key));
        }
        dst.push_back(e.get<std::size_t>());
      }
    }
    ss.finish();
  } else {
    throw ConfigError("manifest.schedule: missing");
  }
  if (const Json* sj = root.object("sampling")) {
    Section ss(*sj, "manifest.sampling");
    ss.number("sample_spacing", s.options.sample_spacing);
    ss.count("max_samples", s.options.max_samples);
    ss.finish();
  }
  if (s.owner.size() != s.N.size() || s.T.size() != s.owner.size() + 1) {
    throw ConfigError("manifest.schedule: T, N and owner lengths disagree");
  }

  const Json* pj = root.object("pieces");
  if (!pj || !pj->is_array() || pj->size() != 2 * s.owner.size()) {
    throw ConfigError("manifest.pieces: expected a plus and a minus piece per step");
  }
  root.finish();

  struct Params {
    Side side;
    std::size_t target, active;
    double a, b, x_end, xi0, C, taper;
  };
  std::vector<Params> params;
  for (std::size_t i = 0; i < pj->size(); ++i) {
    const std::string path = fmt::format("manifest.pieces[{}]", i);
    Section ps((*pj)[i], path);
    Params p{};
    std::string side;
    std::size_t step = 0, samples = 0;
    double lambda = 0.0;
    ps.count("step", step);
    ps.string("side", side);
    p.side = parse_side(side, path + ".side");
    ps.count("target", p.target);
    ps.number("lambda", lambda);
    ps.number("a", p.a);
    ps.number("b", p.b);
    ps.number("x_end", p.x_end);
    ps.number("xi0", p.xi0);
    ps.number("C", p.C);
    ps.number("taper_width", p.taper);
    ps.count("active", p.active);
    ps.count("samples", samples);
    ps.finish();
    if (p.target >= targets.size()) throw ConfigError(path + ".target: out of range");
    if (!(p.C > 0.0)) throw ConfigError(path + ".C: must be positive");
    params.push_back(p);
  }

  s.pieces.resize(params.size());
  std::exception_ptr failure;
  const auto count = static_cast<long long>(params.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long q = 0; q < count; ++q) {
    try {
      const Params& p = params[static_cast<std::size_t>(q)];
      PotentialPiece piece = make_piece(targets[p.target], p.target, p.side, p.a, p.b, p.x_end, p.xi0,
                                        p.C, p.taper, c.integrator, s.options.sample_spacing,
                                        s.options.max_samples);
      piece.active = p.active;
      s.pieces[static_cast<std::size_t>(q)] = std::move(piece);
    } catch (...) {
#pragma omp critical(manifest_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open manifest '{}'", path));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", path, e.what()));
  }
  return manifest_from_json(j);
}

CheckRecord record(const DecayReport& r) {
  CheckRecord c;
  c.name = "decay";
  c.subject = fmt::format("lambda={} {}", r.lambda, r.piece_id);
  c.inputs = {{"lambda", r.lambda}, {"a", r.a}, {"x_end", r.x_end}, {"b", r.b}, {"C", r.C}};
  c.measured = {{"slope", r.slope},         {"intercept", r.intercept},
                {"additive_C", r.additive_C}, {"max_rise", r.max_rise},
                {"c_bound", r.c_bound},     {"dual_path_error", r.dual_path_error},
                {"samples", r.sample_count}};
  c.tolerances = {{"slope_max", r.slope_limit}};
  c.key_value = r.slope;
  c.limit = r.slope_limit;
  c.passed = r.passed;
  c.message = r.message;
  return c;
}

CheckRecord record(const StabilityReport& r) {
  CheckRecord c;
  c.name = "stability";
  c.subject = fmt::format("lambda_j={} on lambda={} {}", r.lambda_j, r.lambda, r.piece_id);
  c.inputs = {{"lambda", r.lambda}, {"lambda_j", r.lambda_j}, {"phases", r.ratio_per_phase.size()}};
  c.measured = {{"worst_ratio", r.worst_ratio},
                {"worst_phase", r.worst_phase},
                {"worst_x", r.worst_x},
                {"ratio_per_phase", r.ratio_per_phase},
                {"dual_path_error", r.dual_path_error}};
  c.tolerances = {{"ratio_max", r.limit}};
  c.key_value = r.worst_ratio;
  c.limit = r.limit;
  c.passed = r.passed;
  c.message = r.message;
  return c;
}

CheckRecord record(const TailVerdict& v) {
  CheckRecord c;
  c.name = "l2_tail";
  c.subject = fmt::format("lambda={} {}", v.lambda, side_name(v.side));
  c.inputs = {{"target", v.target}, {"lambda", v.lambda}, {"side", side_name(v.side)}};
  c.measured = {{"cycle_sums", v.cycle_sums},
                {"fitted_ratio", v.fitted_ratio},
                {"max_ratio", v.max_ratio}};
  c.tolerances = {{"step_ratio_max", 0.5}};
  c.key_value = v.max_ratio;
  c.limit = 0.5;
  c.passed = v.embedded_candidate;
  c.message = v.message;
  return c;
}

CheckRecord record(const EnvelopeReport& r) {
  CheckRecord c;
  c.name = r.kind == "h" ? "h_envelope" : "piece_envelope";
  c.subject = "all samples";
  c.inputs = {{"samples", r.samples}};
  c.measured = {{"max_ratio", r.max_ratio}, {"worst_x", r.worst_x}};
  c.tolerances = {{"ratio_max", 1.0}};
  c.key_value = r.max_ratio;
  c.limit = 1.0;
  c.passed = r.passed;
  return c;
}

CheckRecord record(const OscCheck& r) {
  CheckRecord c;
  c.name = "oscillatory_" + r.kind;
  c.subject = fmt::format("a={} {}", r.a, r.gamma_description);
  c.inputs = {{"a", r.a},
              {"beta", r.beta},
              {"x0", r.x0_list},
              {"x_max", r.x_max},
              {"trig", r.trig == Trig::sine ? "sin" : "cos"}};
  c.measured = {{"sup_integral", r.sup_integral},
                {"product", r.product},
                {"spread", r.spread},
                {"growth", r.growth}};
  if (r.kind == "control") {
    c.tolerances = {{"growth_min", 10.0}};
    c.key_value = r.growth;
    c.limit = 10.0;
  } else {
    c.tolerances = {{"spread_max", r.factor}};
    c.key_value = r.spread;
    c.limit = r.factor;
  }
  c.passed = r.passed;
  return c;
}

CheckRecord record(const NonembeddingReport& r) {
  CheckRecord c;
  c.name = "nonembedding";
  c.subject = fmt::format("lambda={} {}", r.lambda, r.potential);
  c.inputs = {{"lambda", r.lambda}, {"epsilon", r.epsilon}, {"x0", r.x0}, {"x_max", r.x_max}};
  c.measured = {{"C", r.C},
                {"exponent", r.exponent},
                {"min_margin", r.min_margin},
                {"worst_x", r.worst_x},
                {"l2_actual", r.l2_actual},
                {"l2_lower", r.l2_lower},
                {"dual_path_error", r.dual_path_error}};
  c.tolerances = {{"margin_min", 1.0 - r.tolerance}};
  c.key_value = r.min_margin;
  c.limit = 1.0 - r.tolerance;
  c.passed = r.passed;
  c.message = r.message;
  return c;
}

std::vector<CheckRecord> records(const ScheduleVerification& v) {
  std::vector<CheckRecord> out;
  for (const auto& r : v.decay) out.push_back(record(r));
  for (const auto& r : v.stability) out.push_back(record(r));
  for (const auto& r : v.tails) out.push_back(record(r));
  for (const auto& r : v.envelopes) out.push_back(record(r));
  return out;
}

Json reports_json(const std::vector<CheckRecord>& checks) {
  Json arr = Json::array();
  bool all = true;
  for (const CheckRecord& c : checks) {
    all = all && c.passed;
    arr.push_back({{"name", c.name},
                   {"subject", c.subject},
                   {"inputs", c.inputs},
                   {"measured", c.measured},
                   {"tolerances", c.tolerances},
                   {"passed", c.passed},
                   {"message", c.message}});
  }
  return Json{{"passed", all}, {"count", checks.size()}, {"checks", arr}};
}

void write_summary_csv(std::ostream& os, const std::vector<CheckRecord>& checks) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "check,subject,value,limit,passed\n");
  for (const CheckRecord& c : checks) {
    fmt::format_to(std::back_inserter(buf), "{},\"{}\",{:.17g},{:.17g},{}\n", c.name, c.subject,
                   c.key_value, c.limit, c.passed ? 1 : 0);
  }
  write_buffer(os, buf);
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
  out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dirac
