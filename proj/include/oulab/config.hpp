#pragma once

// Experiment configuration files (TOML). Example:
//
//   seed = 42
//   out = "results"
//   [model]
//   a = [[-1.0, -1.0], [1.0, -1.0]]
//   [domain]
//   kind = "half_space"
//   normal = [1.0, 0.0]
//   offset = 0.0
//   [run]
//   suite = "rotation-2d"      # or checks = ["grid.identities", ...]
//   [limits]
//   max_paths = 10000000
//   max_grid_nodes = 20000
//   wall_clock_seconds = 900

#include <optional>
#include <string>

#include "oulab/harness.hpp"

namespace oulab {

struct ExperimentConfig {
  std::optional<Mat> a;
  std::optional<Domain> domain;
  std::optional<std::string> suite;
  std::vector<std::string> checks;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out = "results";
  ResourceLimits limits;
  std::string source;  // the file contents, used for the content hash
};

/// Parses TOML text; every violation raises a config error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace oulab
