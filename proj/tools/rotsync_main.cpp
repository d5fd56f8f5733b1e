#include <iostream>

#include "CLI11.hpp"
#include "rotsync/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rotation/orthogonal group synchronization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, obs_path, estimate_path, out_dir = ".";
  int jobs = 1;
  bool quiet = false;

  app.add_option("--config", config_path, "experiment config file")
      ->required();
  app.add_option("--obs", obs_path, "observation file (OBS v1)");
  app.add_option("--estimate", estimate_path, "estimate file (STACK v1)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads for sweeps")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "suppress progress output");

  auto* gen = app.add_subcommand("gen", "generate an observation");
  auto* solve = app.add_subcommand("solve", "run an estimator");
  auto* verify = app.add_subcommand("verify", "certify the guarantees");
  auto* sweep = app.add_subcommand("sweep", "error-vs-noise sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    const rotsync::cli::ExperimentConfig cfg =
        rotsync::cli::load_config(config_path);
    if (gen->parsed()) return rotsync::cli::cmd_gen(cfg, out_dir, quiet);
    if (solve->parsed()) {
      if (obs_path.empty()) {
        std::cerr << "error: solve needs --obs\n";
        return 1;
      }
      return rotsync::cli::cmd_solve(cfg, obs_path, out_dir, quiet);
    }
    if (verify->parsed()) {
      if (obs_path.empty()) {
        std::cerr << "error: verify needs --obs\n";
        return 1;
      }
      return rotsync::cli::cmd_verify(cfg, obs_path, estimate_path, out_dir,
                                      quiet);
    }
    if (sweep->parsed()) return rotsync::cli::cmd_sweep(cfg, out_dir, jobs, quiet);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
