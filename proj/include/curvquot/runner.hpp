#pragma once

#include "curvquot/geometry.hpp"
#include "curvquot/solve.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace curvquot::runner {

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;     // overrides the config value
  std::optional<int> resolution;         // overrides the grid resolution
};

// Executes one configuration end to end, writing report.json, trace.csv,
// solution.csv, diagnostics.json and the surface export into out_dir.
// Returns the process exit status: 0 success, 2 bad configuration, 3 solver
// failure, 4 a solution was produced but a verification check failed.
int run(const RunOptions& opts);

// Parsed, validated configuration; exposed so tests can poke the parser
// without going through the filesystem.
struct ParsedConfig {
  std::string mode;  // solve | eigen | subcritical | verify | sweep
  ProblemSpec spec;
  GridKind grid_kind = GridKind::axisymmetric;
  int M = 256;             // axisymmetric resolution
  int Mt = 96, Mp = 192;   // full2d resolution
  NewtonConfig newton;
  std::uint64_t seed = 0;
  double beta = 0.0;
  bool beta_given = false;
  std::string solution_csv;       // verify mode input
  int uniqueness_trials = 0;      // solve mode, 0 disables the probe
  std::vector<double> sweep_p;
  std::vector<int> sweep_resolution;
};

// Throws ConfigError on any unknown key, wrong type, missing field, or
// inconsistent mode/regime pairing.
ParsedConfig parse_config_text(const std::string& json_text);

GridPtr build_grid(const ParsedConfig& cfg);

}  // namespace curvquot::runner
