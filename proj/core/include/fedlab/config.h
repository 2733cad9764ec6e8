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
#ifndef FEDLAB_CONFIG_H_
#define FEDLAB_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedlab/compressors.h"

namespace fedlab {

// All problems found while parsing or validating a configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct ProblemSpec {
  std::string kind = "quadratic_anchors";
  std::vector<std::size_t> counts = {1, 2, 3};
  std::size_t dim = 3;
  std::size_t clients = 8;
  std::size_t samples_per_client = 50;
  double lambda2 = 0.1;
  double l1 = 0.0;
  double heterogeneity = 1.0;
  double condition = 100.0;
  std::uint64_t data_seed = 0;
  std::string path;
};

struct SamplingSpec {
  std::string kind = "full";  // full | uniform | independent
  std::size_t m = 1;
  std::vector<double> p;
};

struct AlgorithmSpec {
  std::string kind = "dcsgd";
  std::size_t rounds = 100;
  double step = 0.0;
  std::string schedule = "constant";  // constant | inverse_time
  double step_offset = 1.0;
  CompressorDescriptor compressor = identity_compressor();
  CompressorDescriptor master_compressor = identity_compressor();
  bool error_feedback = false;
  bool allow_biased = false;
  std::string regime = "uniform";  // error feedback weights
  std::optional<double> kappa;
  std::string oracle = "exact";  // exact | stochastic
  std::size_t batch = 1;
  double alpha = 0.0;
  double gamma = 0.0;
  std::string variant = "lsvrg";
  std::size_t epoch_length = 1;
  std::vector<double> anchor_weights;
  std::string mode = "full";  // full | uniform | ocs | aocs
  std::size_t m = 1;
  std::size_t j_max = 4;
  bool count_overhead = true;
  std::size_t local_steps = 1;
  std::size_t epochs = 1;
  double eta_l = 0.0;
  double eta_g = 1.0;
  std::string preset = "fedshuffle";
  double momentum = 1.0;
  std::optional<std::size_t> warmup_rounds;
  std::vector<double> x0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = ".";
  ProblemSpec problem;
  AlgorithmSpec algorithm;
  SamplingSpec sampling;
};

// Sections in brackets, `key = value` lines, `#` or `;` comments. Dotted
// section names nest. Throws ConfigError listing every problem found.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Algorithm kinds accepted by the `kind` key.
const std::vector<std::string>& algorithm_kinds();

}  // namespace fedlab

#endif  // FEDLAB_CONFIG_H_
