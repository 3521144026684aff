// Command-line front end for the reproduction experiments.
//
//   nsfd run <experiment> [--set key=value]... [--config file.ini] [--out dir] [--plots]
//   nsfd list
//   nsfd diff <produced.csv> <reference.csv> --rtol x [--atol y]
//
// Exit status: 0 success, 2 divergence observed, 1 error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsfd/harness.hpp"

namespace h = nsfd::harness;

namespace {

int do_list() {
  std::cout << "experiments:\n";
  for (const auto& e : h::experiments()) {
    std::cout << "  " << e.id << "  " << e.description << "\n";
    for (const auto& [k, v] : e.defaults) std::cout << "      " << k << " = " << v << "\n";
  }
  std::cout << "\nparameters (--set key=value):\n";
  for (const auto& p : h::kParamKeys) std::cout << "  " << p.key << "  " << p.help << "\n";
  std::cout << "\ndenominator functions:\n";
  for (const auto& t : nsfd::df_registry_tags()) std::cout << "  " << t << "\n";
  std::cout << "\noutput directory: --out, else $" << h::kOutputEnv << ", else ./results\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NSFD schemes for Caputo fractional problems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a named experiment");
  std::string id;
  std::vector<std::string> sets;
  std::string config_path, out_dir;
  bool plots = false;
  run->add_option("experiment", id, "experiment id (see `list`)");
  run->add_option("--set", sets, "parameter override key=value")->take_all();
  run->add_option("--config", config_path, "INI file with [experiment] and [params] sections");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--plots", plots, "also write two-column plot data");

  app.add_subcommand("list", "list experiments, parameters and DF tags");

  auto* diff = app.add_subcommand("diff", "compare two CSV files cell by cell");
  std::string a, b;
  double rtol = 0.0, atol = 0.0;
  diff->add_option("produced", a)->required();
  diff->add_option("reference", b)->required();
  diff->add_option("--rtol", rtol, "relative tolerance")->required();
  diff->add_option("--atol", atol, "absolute tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("list")) return do_list();

    if (app.got_subcommand("diff")) {
      const auto rep = h::diff_against_reference(a, b, rtol, atol);
      std::cout << rep.summary();
      return rep.passed() ? 0 : 1;
    }

    h::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = h::load_config(config_path);
    if (!id.empty()) cfg.experiment = id;
    if (cfg.experiment.empty()) throw h::ConfigError("no experiment given");
    for (const auto& s : sets) cfg.set(s);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.emit_plots = cfg.emit_plots || plots;

    const auto manifest = h::run(cfg);
    for (const auto& o : manifest.outputs) std::cout << o.name << "  " << o.sha256 << "\n";
    for (const auto& n : manifest.notes) std::cout << n << "\n";
    std::cout << manifest.experiment << " finished in " << manifest.wall_seconds << " s\n";
    if (manifest.divergence_observed) {
      std::cout << "divergence observed\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
