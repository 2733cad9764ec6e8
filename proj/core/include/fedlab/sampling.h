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
#ifndef FEDLAB_SAMPLING_H_
#define FEDLAB_SAMPLING_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedlab/random.h"
#include "fedlab/types.h"

namespace fedlab {

using ClientSet = std::vector<std::size_t>;  // ascending client indices

struct WeightedSubset {
  ClientSet clients;
  double probability = 0.0;
};

enum class SamplingKind { kFull, kUniform, kIndependent, kEnumerated };

// Distribution over subsets of {0, ..., n-1}.
class SamplingScheme {
 public:
  static SamplingScheme full(std::size_t n);
  // m clients chosen uniformly without replacement.
  static SamplingScheme uniform(std::size_t n, std::size_t m);
  // Client i participates independently with probability p[i]. Zero entries
  // are permitted only when allow_zero is set; such clients never
  // participate and the scheme is not proper.
  static SamplingScheme independent(std::vector<double> p,
                                    bool allow_zero = false);
  static SamplingScheme enumerated(std::size_t n,
                                   std::vector<WeightedSubset> subsets);

  SamplingKind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  // Subset size for kUniform.
  std::size_t m() const { return m_; }
  // Inclusion probabilities p_i = Prob(i in S).
  const std::vector<double>& inclusion() const { return inclusion_; }
  const std::vector<WeightedSubset>& subsets() const { return subsets_; }
  bool proper() const;
  double expected_size() const;

  std::string describe() const;

 private:
  SamplingScheme() = default;

  SamplingKind kind_ = SamplingKind::kFull;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> inclusion_;
  std::vector<WeightedSubset> subsets_;
};

ClientSet draw(const SamplingScheme& scheme, RandomStream& rng);

// P_ij = Prob({i, j} in S), closed form for every kind.
Matrix probability_matrix(const SamplingScheme& scheme);

// Full list of subsets with positive probability. Limited to n <= 20 for
// uniform and independent kinds.
std::vector<WeightedSubset> enumerate_subsets(const SamplingScheme& scheme);

// Vector v with P - p p^T <= Diag(p o v).
std::vector<double> eso_v(const SamplingScheme& scheme);

// v_i = n (1 - p_i), valid for every proper sampling.
std::vector<double> eso_v_fallback(const SamplingScheme& scheme);

// Independent-sampling probabilities minimizing sum (1 - p_i)/p_i u_i^2
// subject to sum p_i <= m. Zero norms get p_i = 0.
std::vector<double> optimal_probs(std::span<const double> norms,
                                  std::size_t m);

// Aggregation-only approximation of optimal_probs by repeated rescaling of
// the non-saturated probabilities. Returns after at most j_max rescalings.
struct AocsResult {
  std::vector<double> p;
  std::size_t rescalings = 0;
  bool converged = false;
};
AocsResult aocs_detailed(std::span<const double> norms, double m,
                         std::size_t j_max);
std::vector<double> aocs(std::span<const double> norms, std::size_t m,
                         std::size_t j_max);

// sum_i (1 - p_i)/p_i u_i^2 over clients with u_i > 0.
double independent_sampling_variance(std::span<const double> norms,
                                     std::span<const double> p);

// Variance of optimal sampling over variance of uniform sampling with the
// same expected size.
double improvement_factor(std::span<const double> norms, std::size_t m);

using ClientUpdates = std::map<std::size_t, Vector>;

// sum_{i in S} (w_i / p_i) delta_i.
Vector unbiased_aggregate(const ClientSet& subset, std::span<const double> p,
                          const ClientUpdates& deltas,
                          std::span<const double> w);

// sum_{i in S} (w_i / sum_{j in S} w_j) delta_i.
Vector sum_one_aggregate(const ClientSet& subset, std::span<const double> w,
                         const ClientUpdates& deltas);

}  // namespace fedlab

#endif  // FEDLAB_SAMPLING_H_
