// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fblab/grid_field.hpp"
#include "fblab/solvers.hpp"

namespace fblab {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPrecondition = 3;

/// Every key of the config file is mandatory.
struct ExperimentConfig {
  std::string experiment;  // exact-validate | monotonicity-audit | theta-sweep | curvature-sweep
  int dim = 2;
  double half_width = 1.0;
  int nodes_per_axis = 256;
  std::vector<double> theta_list;
  std::vector<double> radii_list;
  std::vector<Point> centers;
  double cutoff_eps = 0.1;
  double epsilon_hat = 0.05;
  std::string boundary_data;  // half-plane | bent
  double bend = 0.0;
  double near_band = 0.1;
  double window_radius = 0.25;
  std::string field_path;  // empty: solve; otherwise a directory of saved fields
  /// nullopt when the file says "auto".
  std::optional<std::vector<double>> delta_schedule;
  double initial_step = 1.0;
  double backtrack = 0.5;
  int max_iterations = 3000;
  double tolerance = 1e-6;
  int harmonic_iterations = 200;
  int coarse_levels = 2;

  GridDomain grid() const;
  SolveParams solve_params() const;
};

/// Parses the flat `key = value` format (numbers, "strings", booleans and
/// possibly nested [arrays]; `#` starts a comment). Throws ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Numerical preconditions checked before any solve starts. Throws
/// PreconditionError.
void validate_preconditions(const ExperimentConfig& config);

struct RunSummary {
  int warnings = 0;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured experiment and writes its artifacts to out_dir.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                          std::ostream& log);

/// `fblab <experiment> --config <path> --out <dir>`; returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace fblab
