#pragma once

#include <string>
#include <vector>

#include "rsspde/config.hpp"

namespace rsspde {

struct RunOutcome {
  int exit_code = 0;               // 0 clean, 1 fault or truncation
  std::vector<std::string> files;  // artifact basenames under out_dir
  std::string summary;             // contents of summary.txt
};

// Runs the configured experiment and writes its artifacts (CSV files,
// manifest.txt, config.resolved.ini, summary.txt) under cfg.out_dir.
// Configuration and model-validation failures propagate as exceptions
// (ConfigError / std::invalid_argument); runtime faults inside trajectories
// are recorded in the artifacts and reported through exit_code = 1.
RunOutcome run_experiment(const RunConfig& cfg);

}  // namespace rsspde
