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
#ifndef FEDLAB_TESTS_SUPPORT_ORACLES_H_
#define FEDLAB_TESTS_SUPPORT_ORACLES_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fedlab/algorithms.h"
#include "fedlab/problems.h"
#include "fedlab/random.h"
#include "fedlab/types.h"

// Reference computations written independently of the library internals.
namespace fedlab_test {

using fedlab::Matrix;
using fedlab::Vector;

struct Outcome {
  double probability = 0.0;
  Vector value;
};

// All k-subsets of {0, ..., n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> combinations(std::size_t n,
                                                   std::size_t k);

// Exact outcome distribution of Rand-k: a uniform k-subset kept and scaled
// by d / k.
std::vector<Outcome> rand_k_outcomes(const Vector& x, std::size_t k);

// Exact outcome distribution of NU Rand-1: coordinate i kept with
// probability |x_i| / ||x||_1 and scaled by its inverse.
std::vector<Outcome> nu_rand1_outcomes(const Vector& x);

Vector outcome_mean(const std::vector<Outcome>& outcomes);
// E ||C - x||^2.
double outcome_variance(const std::vector<Outcome>& outcomes, const Vector& x);

struct Subset {
  std::vector<std::size_t> clients;
  double probability = 0.0;
};
std::vector<Subset> uniform_subsets(std::size_t n, std::size_t m);
std::vector<Subset> independent_subsets(std::span<const double> p);

// sum_i (1 - p_i) / p_i u_i^2 over u_i > 0.
double sampling_objective(std::span<const double> u, std::span<const double> p);

// Minimizer of sampling_objective over sum p <= m, 0 < p <= 1 from the KKT
// conditions: p_i = min(1, u_i / tau) with tau found by bisection.
std::vector<double> kkt_probabilities(std::span<const double> u, double m);

// Projected gradient descent on the same problem; used as a second opinion.
std::vector<double> projected_gradient_probabilities(std::span<const double> u,
                                                     double m,
                                                     std::size_t iterations);

Vector central_difference(const std::function<double(const Vector&)>& f,
                          const Vector& x, double h);

// Root of a continuous f with f(lo) f(hi) <= 0.
double bisect(const std::function<double(double)>& f, double lo, double hi);

Vector gaussian_vector(std::size_t d, fedlab::RandomStream& rng);
Matrix gaussian_matrix(std::size_t rows, std::size_t cols,
                       fedlab::RandomStream& rng);
// Haar-like orthogonal matrix from a QR factorization.
Matrix random_orthogonal(std::size_t n, fedlab::RandomStream& rng);

// Singular values and best rank-b approximation through Eigen's JacobiSVD.
Vector reference_singular_values(const Matrix& a);
Matrix reference_best_rank(const Matrix& a, std::size_t b);

// DIANA Lyapunov ||x - x*||^2 + (c gamma^2 / n) sum_i ||h_i - grad f_i(x*)||^2
// and its exact conditional expectation after one round with exact local
// gradients and Rand-k compression.
struct DianaParams {
  double gamma = 0.0;
  double alpha = 0.0;
  double c = 0.0;
  std::size_t k = 1;
};
double diana_lyapunov_value(const fedlab::FiniteSumProblem& problem,
                            const fedlab::DianaState& state,
                            const DianaParams& params);
double diana_expected_lyapunov(const fedlab::FiniteSumProblem& problem,
                               const fedlab::DianaState& state,
                               const DianaParams& params);

// VR-DIANA Lyapunov ||x - x*||^2 + b gamma^2 H + c gamma^2 D and its exact
// conditional expectation after one round with Rand-k compression. The
// expectation is the same for both reference-point variants.
struct VrParams {
  double gamma = 0.0;
  double alpha = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::size_t k = 1;
};
double vr_lyapunov_value(const fedlab::FiniteSumProblem& problem,
                         const fedlab::VrDianaState& state,
                         const VrParams& params);
double vr_expected_lyapunov(const fedlab::FiniteSumProblem& problem,
                            const fedlab::VrDianaState& state,
                            const VrParams& params);

}  // namespace fedlab_test

#endif  // FEDLAB_TESTS_SUPPORT_ORACLES_H_
