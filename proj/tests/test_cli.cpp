#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <doctest.h>

#include "dirac/commands.hpp"
#include "dirac/error.hpp"
#include "dirac/io.hpp"

using namespace dirac;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string first_line(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

// two free targets, no calibration, three short cycles
RunConfig small_run(const std::string& dir) {
  Json j = Json::parse(R"({
    "targets": [0.7, 1.3],
    "synthesis": {"a0": 10000, "x_max": 20000, "stop_after_cycles": 3,
                  "calibrate": false, "c_bound": 2.2, "growth": 1.25},
    "verify": {"phases": 4}
  })");
  j["output_dir"] = dir;
  return config_from_json(j);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config round trips through JSON") {
    Json j = Json::parse(R"({
      "coefficients": {"p": {"a0": 0.3, "cos": [0.5], "sin": [0.2]}, "q": {"a0": 0, "cos": [0.1], "sin": [0.4]}},
      "targets": [1.7],
      "synthesis": {"mode": "growing", "h": {"kind": "power", "scale": 3, "exponent": 0.25}},
      "oscillatory": {"drift_cases": [{"a": 1, "beta1": 1, "beta2": 1, "trig": "cos"}]}
    })");
    const RunConfig c = config_from_json(j);
    CHECK(c.coefficients.p.a0 == 0.3);
    CHECK(c.coefficients.q.sin_coeffs == std::vector<double>{0.4});
    CHECK(c.synthesis.mode == "growing");
    CHECK(c.oscillatory.drift_cases.size() == 1);
    CHECK(c.oscillatory.drift_cases[0].trig == Trig::cosine);
    const Json once = config_to_json(c);
    const Json twice = config_to_json(config_from_json(once));
    CHECK(once == twice);
    CHECK(dump(once) == dump(twice));

    const RunConfig d = config_from_json(Json::object());
    CHECK(d.synthesis.decay_exponent == 100.0);
    CHECK(d.integrator.rel_tol == 1e-10);
    CHECK(d.output_dir == "out");
  }

  TEST_CASE("bad configs name the offending key") {
    auto message = [](const char* text) {
      try {
        config_from_json(Json::parse(text));
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    CHECK(message(R"({"synthesis": {"a00": 1}})").find("synthesis.a00") != std::string::npos);
    CHECK(message(R"({"synthesis": {"a0": "big"}})").find("synthesis.a0") != std::string::npos);
    CHECK(message(R"({"integrator": {"rel_tol": 0.1}})") != "no error");
    CHECK(message(R"({"synthesis": {"mode": "sometimes"}})").find("synthesis.mode") != std::string::npos);
    CHECK(message(R"({"targets": [0.7, "x"]})").find("targets") != std::string::npos);
  }

  TEST_CASE("overrides") {
    Json j = Json::object();
    apply_override(j, "synthesis.a0=12000");
    apply_override(j, "output_dir=somewhere");
    apply_override(j, "targets=[0.5, 1.1]");
    const RunConfig c = config_from_json(j);
    CHECK(c.synthesis.a0 == 12000.0);
    CHECK(c.output_dir == "somewhere");
    CHECK(c.targets == std::vector<double>{0.5, 1.1});
    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "synthesis..a0=1"), ConfigError);
  }

  TEST_CASE("band and Floquet artifacts") {
    Json j = Json::parse(R"({"coefficients": {"p": {"a0": 2}}, "bands": {"lambda_min": -3, "lambda_max": 3}})");
    j["output_dir"] = "cli_unit_out/mass";
    const RunConfig c = config_from_json(j);
    std::ostringstream log;
    CHECK(cmd_bands(c, log) == exit_pass);
    CHECK(first_line("cli_unit_out/mass/bands.csv") == "lambda,trace,k");
    const Json edges = Json::parse(slurp("cli_unit_out/mass/band_edges.json"));
    REQUIRE(edges["edges"].size() == 2);
    CHECK(std::abs(edges["edges"][0].get<double>() + 1.0) < 0.01);

    CHECK(cmd_floquet(c, 2.0, log) == exit_pass);
    CHECK(first_line("cli_unit_out/mass/floquet.csv") ==
          "x,re_g1,im_g1,re_g2,im_g2,abs_g1,abs_g2,gamma1,gamma2,Gamma1,Psi,Gamma2,delta");
    const Json fj = Json::parse(slurp("cli_unit_out/mass/floquet.json"));
    CHECK(fj["omega"].get<double>() > 0.0);
  }

  TEST_CASE("exceptions map onto exit codes") {
    std::ostringstream log;
    CHECK(run_guarded([]() -> int { throw GapEnergy("gap"); }, log) == exit_usage);
    CHECK(run_guarded([]() -> int { throw ConfigError("bad"); }, log) == exit_usage);
    CHECK(run_guarded([]() -> int { throw HorizonTooShort("short"); }, log) == exit_usage);
    CHECK(run_guarded([]() -> int { throw ResonantPair(0, 1, ResonantPair::Condition::sum_equals_pi, "r"); }, log) ==
          exit_resonance);
    CHECK(run_guarded([]() -> int { throw ResonantFrequency("r"); }, log) == exit_resonance);
    CHECK(run_guarded([]() -> int { throw DecayTooSlow("slow"); }, log) == exit_check_failed);
    CHECK(run_guarded([]() -> int { throw StepSizeUnderflow("h"); }, log) == exit_check_failed);
    CHECK(run_guarded([]() -> int { return exit_pass; }, log) == exit_pass);
    CHECK(log.str().find("error: resonant pair (0, 1)") != std::string::npos);
  }

  TEST_CASE("manifest reproduces the potential samples") {
    const RunConfig c = small_run("cli_unit_out/two");
    std::ostringstream log;
    REQUIRE(cmd_synth(c, log) == exit_pass);
    CHECK(first_line("cli_unit_out/two/potential.csv") == "x,V");
    CHECK(first_line("cli_unit_out/two/schedule.csv") == "step,T_start,T_end,N,owner,lambda");

    const Manifest m = load_manifest("cli_unit_out/two/manifest.json");
    CHECK(m.schedule.pieces.size() == 12);
    const SynthesizedPotential v = assemble(m.schedule, m.config.integrator);
    std::ostringstream csv;
    write_potential_csv(csv, v.pieces());
    CHECK(csv.str() == slurp("cli_unit_out/two/potential.csv"));
    std::ostringstream sched;
    write_schedule_csv(sched, m.schedule);
    CHECK(sched.str() == slurp("cli_unit_out/two/schedule.csv"));
    CHECK(dump(manifest_json(m.config, m.schedule)) == slurp("cli_unit_out/two/manifest.json"));
  }

  TEST_CASE("verify passes the manifest and fails a tampered one") {
    const RunConfig c = small_run("cli_unit_out/two_verify");
    std::ostringstream log;
    REQUIRE(cmd_synth(c, log) == exit_pass);
    CHECK(cmd_verify(c, "cli_unit_out/two_verify/manifest.json", log) == exit_pass);
    const Json reports = Json::parse(slurp("cli_unit_out/two_verify/reports.json"));
    CHECK(reports["passed"].get<bool>());
    CHECK(first_line("cli_unit_out/two_verify/summary.csv") == "check,subject,value,limit,passed");

    // halve C on every piece: the decay slope halves and the checks fail
    Json m = Json::parse(slurp("cli_unit_out/two_verify/manifest.json"));
    for (auto& p : m["pieces"]) p["C"] = p["C"].get<double>() * 0.5;
    write_file("cli_unit_out/two_verify/tampered.json", dump(m));
    std::ostringstream tlog;
    CHECK(cmd_verify(c, "cli_unit_out/two_verify/tampered.json", tlog) == exit_check_failed);
    CHECK(tlog.str().find("DecayTooSlow") != std::string::npos);
  }
}
