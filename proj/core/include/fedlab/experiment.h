/*
 * Copyright 2026 The fedlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef FEDLAB_EXPERIMENT_H_
#define FEDLAB_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedlab/algorithms.h"
#include "fedlab/config.h"
#include "fedlab/problems.h"
#include "fedlab/sampling.h"

namespace fedlab {

// Environment variable that replaces experiment.output_dir.
inline constexpr const char* kOutputDirEnv = "FEDLAB_OUTPUT_DIR";

FiniteSumProblem build_problem(const ProblemSpec& spec);
SamplingScheme build_sampling(const SamplingSpec& spec, std::size_t n);

// One seeded run of the configured algorithm.
Trajectory run_single(const ExperimentConfig& config,
                      const FiniteSumProblem& problem, std::uint64_t seed,
                      RecordSink sink = {});

struct ExperimentOutput {
  std::vector<std::string> run_files;
  std::string summary_file;
};

// Writes <dir>/<name>_seed<seed>.csv per seed and <dir>/<name>_summary.csv.
// The directory is, in order: `output_dir` when given, the environment
// override, then the config's output_dir.
ExperimentOutput run_experiment(const ExperimentConfig& config,
                                std::optional<std::string> output_dir = {});

}  // namespace fedlab

#endif  // FEDLAB_EXPERIMENT_H_
