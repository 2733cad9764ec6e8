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
#ifndef FEDLAB_PROBLEMS_H_
#define FEDLAB_PROBLEMS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedlab/random.h"
#include "fedlab/types.h"

namespace fedlab {

enum class ProblemKind { kQuadraticAnchors, kCounterexample, kLogistic, kLeastSquares };

struct Regularizer {
  enum class Kind { kNone, kL1 };
  Kind kind = Kind::kNone;
  double lambda = 0.0;

  static Regularizer none() { return {}; }
  static Regularizer l1(double lambda);
  double value(const Vector& x) const;
};

// Proximal map of gamma * R.
Vector prox(const Regularizer& reg, double gamma, const Vector& x);

struct SmoothnessInfo {
  double L = 0.0;    // smoothness of every component f_ij
  double mu = 0.0;   // strong convexity of f
  double L_f = 0.0;  // smoothness of f
};

// Samples per client, assigned in order.
struct Partition {
  std::vector<std::size_t> counts;

  static Partition equal(std::size_t samples, std::size_t clients);
  static Partition explicit_counts(std::vector<std::size_t> counts);
  std::size_t total() const;
};

struct Dataset {
  Matrix features;  // one sample per row
  Vector labels;
};

// Rows are samples, the last column is the label.
Dataset load_csv_dataset(const std::string& path);

namespace detail {
class ProblemModel;
}

// f(x) = sum_i w_i f_i(x) + R(x) with f_i the mean of its components f_ij.
// Immutable; copies share the underlying data.
class FiniteSumProblem {
 public:
  explicit FiniteSumProblem(std::shared_ptr<const detail::ProblemModel> model);

  ProblemKind kind() const;
  std::string describe() const;
  std::size_t clients() const;
  std::size_t dim() const;
  std::size_t components(std::size_t client) const;
  std::span<const double> weights() const;
  const Regularizer& regularizer() const;
  SmoothnessInfo smoothness() const;

  // Minimizer of the full objective, when available.
  const std::optional<Vector>& optimum() const;
  // Fixed point reached by unnormalized local steps on anchor quadratics.
  const std::optional<Vector>& inconsistent_point() const;
  std::optional<double> optimal_value() const;

  double component_value(std::size_t client, std::size_t j, const Vector& x) const;
  double client_value(std::size_t client, const Vector& x) const;
  // Smooth part sum_i w_i f_i(x).
  double value(const Vector& x) const;
  // value(x) + R(x).
  double objective(const Vector& x) const;

  Vector grad(std::size_t client, std::size_t j, const Vector& x) const;
  Vector grad_client(std::size_t client, const Vector& x) const;
  Vector grad_full(const Vector& x) const;

  // Mean gradient of `batch` components drawn with replacement.
  Vector stochastic_grad(std::size_t client, const Vector& x, RandomStream& rng,
                         std::size_t batch = 1) const;

  const detail::ProblemModel& model() const { return *model_; }

 private:
  std::shared_ptr<const detail::ProblemModel> model_;
};

// f_ij(x) = ||x - e_i||^2, client i holding counts[i] copies.
FiniteSumProblem quadratic_anchors(std::span<const std::size_t> counts,
                                   std::size_t d);

// Three clients, f_i(x) = <a_i, x>^2 + ||x||^2 / 4 with
// a = (-3, 2, 2), (2, -3, 2), (2, 2, -3).
FiniteSumProblem counterexample_problem();

// f_ij(x) = log(1 + exp(-b_ij <A_ij, x>)) + lambda2 / 2 ||x||^2.
FiniteSumProblem logistic_regression(const Matrix& features,
                                     const Vector& labels, double lambda2,
                                     const Partition& partition,
                                     Regularizer reg = Regularizer::none());

struct SyntheticLogisticOptions {
  std::size_t clients = 8;
  std::size_t samples_per_client = 50;
  std::size_t dim = 10;
  double lambda2 = 0.1;
  // Spread of the per-client label-generating models.
  double heterogeneity = 1.0;
  std::uint64_t seed = 0;
  Regularizer reg;
};

// Unit-norm Gaussian features; labels drawn from a logistic model.
FiniteSumProblem synthetic_logistic(const SyntheticLogisticOptions& options);

struct LeastSquaresOptions {
  std::size_t clients = 4;
  std::size_t samples_per_client = 1;
  std::size_t dim = 10;
  // Eigenvalues of A are geometrically spaced in [1, condition].
  double condition = 100.0;
  std::uint64_t seed = 0;
};

// f_ij(x) = x^T A x / 2 - <y_ij, x> with shared A.
FiniteSumProblem least_squares(const LeastSquaresOptions& options);

// Uniform permutation of the client's component indices.
std::vector<std::size_t> permute_epoch(const FiniteSumProblem& problem,
                                       std::size_t client, RandomStream& rng);

struct HeterogeneityEstimate {
  // max over points of sum_i w_i ||grad f_i(x) - grad f(x)||^2
  double max_dissimilarity = 0.0;
  // sum_i w_i ||grad f_i(x*)||^2 when the optimum is known
  std::optional<double> at_optimum;
};

HeterogeneityEstimate estimate_heterogeneity(const FiniteSumProblem& problem,
                                             std::span<const Vector> points);

namespace detail {

class ProblemModel {
 public:
  virtual ~ProblemModel() = default;

  virtual double component_value(std::size_t i, std::size_t j,
                                 const Vector& x) const = 0;
  virtual Vector component_grad(std::size_t i, std::size_t j,
                                const Vector& x) const = 0;
  virtual double client_value(std::size_t i, const Vector& x) const;
  virtual Vector client_grad(std::size_t i, const Vector& x) const;

  ProblemKind kind;
  std::string description;
  std::size_t dim = 0;
  std::vector<std::size_t> counts;
  std::vector<double> weights;
  Regularizer reg;
  SmoothnessInfo smoothness;
  std::optional<Vector> optimum;
  std::optional<Vector> inconsistent_point;
  std::optional<double> optimal_value;
};

}  // namespace detail
}  // namespace fedlab

#endif  // FEDLAB_PROBLEMS_H_
