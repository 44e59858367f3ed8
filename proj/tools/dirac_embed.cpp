// Command-line front end: bands, floquet, synth, verify, oscillatory.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dirac/commands.hpp"
#include "dirac/error.hpp"

namespace {

dirac::RunConfig build_config(const std::string& path, const std::vector<std::string>& overrides) {
  dirac::Json j = dirac::Json::object();
  if (!path.empty()) {
    // parse once to report errors with the file name, then re-serialize
    j = dirac::config_to_json(dirac::load_config(path));
  }
  for (const std::string& o : overrides) dirac::apply_override(j, o);
  return dirac::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedded eigenvalues for periodic Dirac operators by phase-locked 1/x potentials"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::vector<double> targets;
  app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "output directory (output_dir)");
  app.add_option("-s,--set", overrides, "override a config key, e.g. synthesis.a0=12000");
  app.add_option("--targets", targets, "eigenvalues to embed (targets)");

  auto* bands = app.add_subcommand("bands", "scan the monodromy trace and locate band edges");
  auto* floquet = app.add_subcommand("floquet", "Floquet solution and derived data on one period");
  double lambda = 0.0;
  floquet->add_option("-l,--lambda", lambda, "energy inside a band")->required();
  auto* synth = app.add_subcommand("synth", "build the round-robin potential and its manifest");
  auto* verify = app.add_subcommand("verify", "run the verification suite on a manifest");
  std::string manifest;
  verify->add_option("-m,--manifest", manifest, "manifest.json written by synth")->required();
  auto* osc = app.add_subcommand("oscillatory", "oscillatory-integral bound checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? dirac::exit_pass : dirac::exit_usage;
  }

  return dirac::run_guarded(
      [&]() -> int {
        std::vector<std::string> all = overrides;
        if (!out_dir.empty()) all.push_back("output_dir=" + dirac::Json(out_dir).dump());
        if (!targets.empty()) all.push_back("targets=" + dirac::Json(targets).dump());
        const dirac::RunConfig config = build_config(config_path, all);
        if (*bands) return dirac::cmd_bands(config, std::cerr);
        if (*floquet) return dirac::cmd_floquet(config, lambda, std::cerr);
        if (*synth) return dirac::cmd_synth(config, std::cerr);
        if (*verify) return dirac::cmd_verify(config, manifest, std::cerr);
        if (*osc) return dirac::cmd_oscillatory(config, std::cerr);
        return dirac::exit_usage;
      },
      std::cerr);
}
