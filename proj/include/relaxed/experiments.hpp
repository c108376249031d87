// Copyright 2026 The relaxed authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "relaxed/config.hpp"

namespace relaxed {

/// Exit code when a consistency oracle trips.
inline constexpr int kOracleViolationExit = 3;

struct ExperimentOutcome {
  int exit_code = 0;
  std::vector<std::string> files;       // CSV files written
  std::vector<std::string> violations;  // one line per failed oracle
};

/// out_dir, else $RELAXED_OUT_DIR, else ".".
std::string resolve_out_dir(const ExperimentConfig& config);

std::size_t hardware_threads();

/// Runs the configured experiment and writes its CSV files. Each file starts
/// with the resolved config as comment lines. Oracle failures give a nonzero
/// exit code and a diagnostics file; bad parameters throw.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& log);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
};

MeanStd mean_std(std::span<const double> values);

}  // namespace relaxed
