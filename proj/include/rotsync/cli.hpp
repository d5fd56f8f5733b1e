#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotsync/diagnostics.hpp"

namespace rotsync::cli {

/// Flat key = value experiment description ('#' starts a comment). Every
/// numeric field is validated at parse time.
struct ExperimentConfig {
  int n = 20;
  int d = 3;
  double sigma = 0.0;
  std::string noise_path;  // custom noise matrix (whitespace floats), optional
  std::uint64_t seed = 1;
  std::string estimator = "spectral+rgm";  // spectral | rgm | gpm | spectral+rgm
  Group group = Group::SpecialOrthogonal;
  StepMode step_mode = StepMode::Safe;
  double alpha = 0.5;
  double t_fixed = 0.0;  // 0 -> 1/(4nd)
  double t_floor = 0.0;  // 0 -> t_fixed/10
  double tol = 1e-10;
  int max_iter = 5000;
  std::vector<std::string> checks{"all"};
  std::vector<double> sigma_grid;        // sweep
  std::vector<std::uint64_t> seed_list;  // sweep

  StepsizePolicy policy() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

/// Deterministic observation built from the config (Gaussian noise, or the
/// custom matrix when noise_path is set).
Observation build_observation(const ExperimentConfig& cfg);

/// Canonical file name for a generated observation.
std::string obs_filename(const ExperimentConfig& cfg);

// Command entry points. Exit codes: 0 success (solve: converged), 1 bad
// input or a failed applicable check (verify), 2 iteration budget exhausted
// (solve).
int cmd_gen(const ExperimentConfig& cfg, const std::string& out_dir,
            bool quiet);
int cmd_solve(const ExperimentConfig& cfg, const std::string& obs_path,
              const std::string& out_dir, bool quiet);
int cmd_verify(const ExperimentConfig& cfg, const std::string& obs_path,
               const std::string& estimate_path, const std::string& out_dir,
               bool quiet);
int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
              int jobs, bool quiet);

}  // namespace rotsync::cli
