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
#ifndef FEDLAB_ORDERED_DROPOUT_H_
#define FEDLAB_ORDERED_DROPOUT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedlab/random.h"
#include "fedlab/types.h"

namespace fedlab {

// F(x) = U V x with hidden width K = U.cols() = V.rows().
struct LinearOdModel {
  Matrix U;  // m x K
  Matrix V;  // K x n

  std::size_t width() const { return static_cast<std::size_t>(U.cols()); }
};

// Distribution over width fractions 0 < p_1 < ... <= 1.
class DropoutDistribution {
 public:
  // {1/k, 2/k, ..., 1} with equal probabilities.
  static DropoutDistribution uniform(std::size_t k);
  static DropoutDistribution custom(std::vector<double> fractions,
                                    std::vector<double> probabilities);

  const std::vector<double>& fractions() const { return fractions_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  double sample(RandomStream& rng) const;
  // Every width b in 1..K is reached by some fraction.
  bool covers(std::size_t K) const;

 private:
  std::vector<double> fractions_;
  std::vector<double> probabilities_;
};

// ceil(p K), with fractions within rounding error of b / K mapped to b.
std::size_t active_units(double p, std::size_t K);

// U[:, :b] V[:b, :] for b = active_units(p, K).
Matrix truncate(const LinearOdModel& model, double p);
// Same, by unit count.
Matrix truncate_units(const LinearOdModel& model, std::size_t b);

struct OdTrainOptions {
  std::size_t steps = 0;
  // Step size relative to the squared spectral norm of the target.
  double eta = 0.05;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
};

struct OdTrainResult {
  LinearOdModel model;
  // E_p ||F_p - A||_F^2 of the returned model.
  double objective = 0.0;
  std::vector<std::string> warnings;
};

// Smallest gap between consecutive singular values, including the last one
// and zero.
double singular_gap(const Matrix& a);

// Sampled-width gradient descent on ||F_p - A||_F^2, updating only the active
// blocks. Keeps the restart with the lowest objective.
OdTrainResult od_train(const Matrix& a, std::size_t K,
                       const DropoutDistribution& distribution,
                       const OdTrainOptions& options);

// ||F_b - A_b||_F for b = 1..K.
std::vector<double> width_errors(const LinearOdModel& model, const Matrix& a);

}  // namespace fedlab

#endif  // FEDLAB_ORDERED_DROPOUT_H_
