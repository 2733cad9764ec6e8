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
#include "fedlab/sampling.h"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "support/oracles.h"

namespace fedlab {
namespace {

using fedlab_test::Subset;

Matrix enumerated_matrix(const std::vector<Subset>& subsets, std::size_t n) {
  Matrix P = Matrix::Zero(static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(n));
  for (const auto& s : subsets)
    for (std::size_t i : s.clients)
      for (std::size_t j : s.clients)
        P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            s.probability;
  return P;
}

double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().maxCoeff();
}

bool eso_holds(const SamplingScheme& scheme, const std::vector<double>& v,
               double tol) {
  const auto& p = scheme.inclusion();
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::Map<const Vector> pv(p.data(), n);
  Matrix gap = probability_matrix(scheme) - pv * pv.transpose();
  for (Eigen::Index i = 0; i < n; ++i) gap(i, i) -= p[i] * v[i];
  return max_eigenvalue(gap) <= tol;
}

std::vector<double> random_norms(std::size_t n, RandomStream& rng) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform() < 0.15 ? 0.0 : std::exp(2.0 * rng.normal());
  if (std::all_of(u.begin(), u.end(), [](double x) { return x == 0.0; }))
    u[0] = 1.0;
  return u;
}

// draw ----------------------------------------------------------------------

TEST(Draw, FullAndDegenerateIndependent) {
  RandomStream rng(1);
  EXPECT_EQ(draw(SamplingScheme::full(4), rng), (ClientSet{0, 1, 2, 3}));
  EXPECT_EQ(draw(SamplingScheme::independent({1, 1, 1}), rng),
            (ClientSet{0, 1, 2}));
}

TEST(Draw, IndependentPairFrequency) {
  RandomStream rng(2);
  const auto scheme = SamplingScheme::independent({0.5, 0.5});
  int both = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) both += draw(scheme, rng).size() == 2;
  EXPECT_NEAR(both / static_cast<double>(n), 0.25, 0.01);
}

TEST(Draw, UniformHasFixedSizeAndAscendingOrder) {
  RandomStream rng(3);
  const auto scheme = SamplingScheme::uniform(7, 3);
  for (int t = 0; t < 1000; ++t) {
    const ClientSet s = draw(scheme, rng);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  }
}

TEST(Draw, PairFrequenciesMatchProbabilityMatrix) {
  const std::vector<SamplingScheme> schemes = {
      SamplingScheme::uniform(4, 2),
      SamplingScheme::independent({0.2, 0.5, 0.9, 0.35}),
      SamplingScheme::enumerated(
          3, {{{0}, 0.2}, {{0, 1}, 0.3}, {{1, 2}, 0.1}, {{0, 1, 2}, 0.4}})};
  const int draws = 1000000;
  for (const auto& scheme : schemes) {
    const auto n = static_cast<Eigen::Index>(scheme.n());
    Matrix counts = Matrix::Zero(n, n);
    RandomStream rng = make_stream(4, Purpose::kClientSampling);
    for (int t = 0; t < draws; ++t) {
      const ClientSet s = draw(scheme, rng);
      for (std::size_t i : s)
        for (std::size_t j : s)
          counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1;
    }
    const Matrix P = probability_matrix(scheme);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double f = counts(i, j) / draws;
        const double se = std::sqrt(P(i, j) * (1 - P(i, j)) / draws);
        EXPECT_LE(std::abs(f - P(i, j)), 4.0 * se + 1e-12)
            << scheme.describe() << " (" << i << "," << j << ")";
      }
    }
  }
}

// probability matrix ------------------------------------------------------------

TEST(ProbabilityMatrix, MatchesEnumeration) {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t m = 1; m <= n; ++m) {
      const auto scheme = SamplingScheme::uniform(n, m);
      EXPECT_LE((probability_matrix(scheme) -
                 enumerated_matrix(fedlab_test::uniform_subsets(n, m), n))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-14);
      EXPECT_NEAR(probability_matrix(scheme).trace(), static_cast<double>(m),
                  1e-12);
    }
  }
  const std::vector<double> p = {0.1, 0.7, 0.4, 1.0, 0.55};
  const auto scheme = SamplingScheme::independent(p);
  const Matrix P = probability_matrix(scheme);
  EXPECT_LE((P - enumerated_matrix(fedlab_test::independent_subsets(p), 5))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
  EXPECT_NEAR(P.trace(), scheme.expected_size(), 1e-12);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      EXPECT_LE(P(i, j), std::min(p[i], p[j]) + 1e-15);
}

TEST(ProbabilityMatrix, FullIsAllOnes) {
  EXPECT_EQ(probability_matrix(SamplingScheme::full(3)), Matrix::Ones(3, 3));
}

TEST(SamplingScheme, EnumeratedProbabilitiesMustSumToOne) {
  EXPECT_THROW(SamplingScheme::enumerated(2, {{{0}, 0.5}, {{1}, 0.4}}),
               InvalidArgument);
  EXPECT_THROW(SamplingScheme::independent({0.5, 0.0}), InvalidArgument);
  EXPECT_FALSE(SamplingScheme::independent({0.5, 0.0}, true).proper());
  EXPECT_THROW(SamplingScheme::uniform(3, 4), InvalidArgument);
}

// ESO --------------------------------------------------------------------------

TEST(Eso, ClosedForms) {
  EXPECT_EQ(eso_v(SamplingScheme::full(5)), std::vector<double>(5, 0.0));
  EXPECT_EQ(eso_v(SamplingScheme::uniform(2, 1)), std::vector<double>(2, 1.0));
  EXPECT_TRUE(eso_holds(SamplingScheme::uniform(2, 1), {1.0, 1.0}, 1e-14));
  const auto ind = SamplingScheme::independent({0.3, 0.7});
  const auto v = eso_v(ind);
  EXPECT_NEAR(v[0], 0.7, 1e-15);
  EXPECT_NEAR(v[1], 0.3, 1e-15);
  // P - p p^T is diagonal and equals Diag(p o v).
  const Matrix gap = probability_matrix(ind) - Eigen::Vector2d(0.3, 0.7) *
                                                   Eigen::RowVector2d(0.3, 0.7);
  EXPECT_NEAR(gap(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(gap(0, 0), 0.3 * 0.7, 1e-15);
  EXPECT_NEAR(gap(1, 1), 0.7 * 0.3, 1e-15);
}

TEST(Eso, CertifiedForEveryKindAndBoundedBelow) {
  RandomStream rng(5);
  std::vector<SamplingScheme> schemes = {SamplingScheme::uniform(6, 2),
                                         SamplingScheme::uniform(5, 5),
                                         SamplingScheme::independent({0.2, 0.9, 0.6})};
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.below(4);
    std::vector<WeightedSubset> subsets;
    double total = 0.0;
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      WeightedSubset s;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) s.clients.push_back(i);
      s.probability = rng.uniform();
      total += s.probability;
      subsets.push_back(s);
    }
    for (auto& s : subsets) s.probability /= total;
    schemes.push_back(SamplingScheme::enumerated(n, subsets));
  }
  for (const auto& scheme : schemes) {
    const auto v = eso_v(scheme);
    EXPECT_TRUE(eso_holds(scheme, v, 1e-9)) << scheme.describe();
    EXPECT_TRUE(eso_holds(scheme, eso_v_fallback(scheme), 1e-12));
    for (std::size_t i = 0; i < v.size(); ++i)
      EXPECT_GE(v[i], 1.0 - scheme.inclusion()[i] - 1e-9) << scheme.describe();
  }
}

TEST(Eso, RejectsImproperAndLargeEnumerated) {
  EXPECT_THROW(eso_v(SamplingScheme::independent({0.5, 0.0}, true)),
               InvalidArgument);
  std::vector<WeightedSubset> subsets;
  ClientSet all(13);
  std::iota(all.begin(), all.end(), 0);
  subsets.push_back({all, 1.0});
  EXPECT_THROW(eso_v(SamplingScheme::enumerated(13, subsets)), InvalidArgument);
}

// optimal probabilities ----------------------------------------------------------

TEST(OptimalProbs, WorkedInstances) {
  const std::vector<double> a = {1, 2, 3};
  const auto p = optimal_probs(a, 2);
  EXPECT_NEAR(p[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(p[2], 1.0);
  const std::vector<double> b = {1, 1, 8};
  const auto q = optimal_probs(b, 2);
  EXPECT_NEAR(q[0], 0.5, 1e-15);
  EXPECT_NEAR(q[1], 0.5, 1e-15);
  EXPECT_EQ(q[2], 1.0);
  EXPECT_EQ(optimal_probs(b, 3), std::vector<double>(3, 1.0));
}

TEST(OptimalProbs, AgreesWithOracles) {
  RandomStream rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(7);
    const auto u = random_norms(n, rng);
    const std::size_t m = 1 + rng.below(n);
    const auto p = optimal_probs(u, m);
    const auto kkt = fedlab_test::kkt_probabilities(u, static_cast<double>(m));
    const auto pg = fedlab_test::projected_gradient_probabilities(
        u, static_cast<double>(m), 3000);
    const double f = fedlab_test::sampling_objective(u, p);
    const double scale = std::max(1.0, fedlab_test::sampling_objective(u, kkt));
    EXPECT_NEAR(f, fedlab_test::sampling_objective(u, kkt), 1e-9 * scale);
    EXPECT_LE(f, fedlab_test::sampling_objective(u, pg) + 1e-9 * scale);
    EXPECT_LE(std::accumulate(p.begin(), p.end(), 0.0), m + 1e-12);
    // KKT: u_i / p_i constant over the unsaturated support.
    double ratio = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(p[i], 0.0);
      EXPECT_LE(p[i], 1.0);
      if (u[i] == 0.0) {
        EXPECT_EQ(p[i], 0.0);
      }
      if (u[i] > 0.0 && p[i] < 1.0) {
        if (ratio < 0) {
          ratio = u[i] / p[i];
        }
        EXPECT_NEAR(u[i] / p[i], ratio, 1e-8 * ratio);
      }
    }
  }
}

TEST(OptimalProbs, RejectsBadInput) {
  const std::vector<double> zero = {0, 0};
  EXPECT_THROW(optimal_probs(zero, 1), InvalidArgument);
  const std::vector<double> u = {1, 2};
  EXPECT_THROW(optimal_probs(u, 3), InvalidArgument);
  EXPECT_THROW(optimal_probs(u, 0), InvalidArgument);
}

// AOCS --------------------------------------------------------------------------

TEST(Aocs, WorkedInstances) {
  const std::vector<double> a = {1, 2, 3};
  const auto ra = aocs_detailed(a, 2.0, 4);
  EXPECT_NEAR(ra.p[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(ra.p[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(ra.p[2], 1.0);
  EXPECT_EQ(ra.rescalings, 0u);
  const std::vector<double> b = {1, 1, 8};
  const auto rb = aocs_detailed(b, 2.0, 4);
  EXPECT_NEAR(rb.p[0], 0.5, 1e-15);
  EXPECT_NEAR(rb.p[1], 0.5, 1e-15);
  EXPECT_EQ(rb.p[2], 1.0);
  EXPECT_EQ(rb.rescalings, 1u);
  const std::vector<double> flat(5, 2.5);
  for (double p : aocs(flat, 3, 4)) EXPECT_NEAR(p, 0.6, 1e-15);
}

TEST(Aocs, MatchesOptimalAtItsFixedPoint) {
  RandomStream rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(7);
    const auto u = random_norms(n, rng);
    const std::size_t m = 1 + rng.below(n);
    const auto r = aocs_detailed(u, static_cast<double>(m), 4);
    if (!r.converged) continue;
    const auto p = optimal_probs(u, m);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.p[i], p[i], 1e-12);
  }
  EXPECT_THROW(aocs(std::vector<double>{1.0}, 1, 0), InvalidArgument);
}

// improvement factor ---------------------------------------------------------------

TEST(ImprovementFactor, Extremes) {
  EXPECT_NEAR(improvement_factor(std::vector<double>(4, 3.0), 2), 1.0, 1e-14);
  EXPECT_EQ(improvement_factor(std::vector<double>{0, 0, 5}, 1), 0.0);
  EXPECT_THROW(improvement_factor(std::vector<double>{0, 0}, 1), InvalidArgument);
}

TEST(ImprovementFactor, WorkedInstanceByDirectEvaluation) {
  const std::vector<double> u = {1, 2, 3};
  const auto p = optimal_probs(u, 2);
  const std::vector<double> uniform(3, 2.0 / 3.0);
  const double expected = fedlab_test::sampling_objective(u, p) /
                          fedlab_test::sampling_objective(u, uniform);
  EXPECT_NEAR(improvement_factor(u, 2), expected, 1e-14);
  // cross-check the independent-sampling variance against subset enumeration
  Vector zeta(3);
  zeta << 1, 2, 3;
  double enumerated = 0.0;
  for (const auto& s : fedlab_test::independent_subsets(p)) {
    double est = 0.0;
    for (std::size_t i : s.clients) est += zeta(static_cast<Eigen::Index>(i)) / p[i];
    enumerated += s.probability * (est - zeta.sum()) * (est - zeta.sum());
  }
  EXPECT_NEAR(independent_sampling_variance(u, p), enumerated, 1e-12);
}

TEST(ImprovementFactor, BoundedAndScaleInvariant) {
  RandomStream rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(7);
    auto u = random_norms(n, rng);
    const std::size_t m = 1 + rng.below(n - 1);
    const double a = improvement_factor(u, m);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0 + 1e-12);
    for (auto& x : u) x *= 7.5;
    EXPECT_NEAR(improvement_factor(u, m), a, 1e-12);
  }
}

// aggregation -----------------------------------------------------------------------

TEST(Aggregate, IndependentSamplingVarianceIdentity) {
  RandomStream rng(9);
  for (std::size_t n = 1; n <= 10; ++n) {
    std::vector<double> p(n), w(n);
    ClientUpdates deltas;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 0.05 + 0.95 * rng.uniform();
      w[i] = rng.uniform();
      deltas[i] = fedlab_test::gaussian_vector(3, rng);
    }
    Vector target = Vector::Zero(3);
    double closed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      target += w[i] * deltas[i];
      closed += w[i] * w[i] * (1 - p[i]) / p[i] * deltas[i].squaredNorm();
    }
    double lhs = 0.0;
    Vector mean = Vector::Zero(3);
    for (const auto& s : fedlab_test::independent_subsets(p)) {
      const Vector g = s.clients.empty()
                           ? Vector::Zero(3)
                           : unbiased_aggregate(s.clients, p, deltas, w);
      mean += s.probability * g;
      lhs += s.probability * (g - target).squaredNorm();
    }
    EXPECT_LE((mean - target).norm(), 1e-12);
    EXPECT_NEAR(lhs, closed, 1e-10 * std::max(1.0, closed));
  }
}

TEST(Aggregate, UnbiasedOverUniformSubsets) {
  const std::vector<double> w = {1.0 / 6, 2.0 / 6, 3.0 / 6};
  const std::vector<double> p(3, 2.0 / 3.0);
  RandomStream rng(10);
  ClientUpdates deltas;
  Vector target = Vector::Zero(4);
  for (std::size_t i = 0; i < 3; ++i) {
    deltas[i] = fedlab_test::gaussian_vector(4, rng);
    target += w[i] * deltas[i];
  }
  Vector mean = Vector::Zero(4);
  for (const auto& s : fedlab_test::uniform_subsets(3, 2))
    mean += s.probability * unbiased_aggregate(s.clients, p, deltas, w);
  EXPECT_LE((mean - target).norm(), 1e-14);
  const Vector full = unbiased_aggregate({0, 1, 2}, std::vector<double>(3, 1.0),
                                         deltas, w);
  EXPECT_LE((full - target).norm(), 1e-15);
}

TEST(Aggregate, SumOneContributionsAreBiased) {
  const std::vector<double> w = {1.0 / 6, 2.0 / 6, 3.0 / 6};
  // contribution of client i: expectation of w_i / sum_{j in S} w_j over S
  std::vector<double> contribution(3, 0.0);
  for (const auto& s : fedlab_test::uniform_subsets(3, 2)) {
    for (std::size_t i = 0; i < 3; ++i) {
      ClientUpdates unit;
      for (std::size_t j : s.clients)
        unit[j] = Vector::Constant(1, j == i ? 1.0 : 0.0);
      contribution[i] += s.probability * sum_one_aggregate(s.clients, w, unit)(0);
    }
  }
  const double total = contribution[0] + contribution[1] + contribution[2];
  EXPECT_NEAR(contribution[0] / total, 7.0 / 36.0, 1e-12);
  EXPECT_NEAR(contribution[1] / total, 16.0 / 45.0, 1e-12);
  EXPECT_NEAR(contribution[2] / total, 9.0 / 20.0, 1e-12);
}

TEST(Aggregate, SumOneEdgeCases) {
  ClientUpdates one;
  one[2] = Vector::Constant(2, 3.5);
  const std::vector<double> w = {0.2, 0.3, 0.5};
  EXPECT_EQ(sum_one_aggregate({2}, w, one), Vector::Constant(2, 3.5));
  EXPECT_THROW(sum_one_aggregate({}, w, one), InvalidArgument);
  EXPECT_THROW(sum_one_aggregate({1}, w, one), InvalidArgument);
  EXPECT_THROW(unbiased_aggregate({1}, std::vector<double>(3, 0.5), one, w),
               InvalidArgument);
  // equal weights: symmetric, hence unbiased
  const std::vector<double> eq(4, 0.25);
  ClientUpdates deltas;
  RandomStream rng(11);
  Vector target = Vector::Zero(2);
  for (std::size_t i = 0; i < 4; ++i) {
    deltas[i] = fedlab_test::gaussian_vector(2, rng);
    target += 0.25 * deltas[i];
  }
  Vector mean = Vector::Zero(2);
  for (const auto& s : fedlab_test::uniform_subsets(4, 3))
    mean += s.probability * sum_one_aggregate(s.clients, eq, deltas);
  EXPECT_LE((mean - target).norm(), 1e-14);
}

}  // namespace
}  // namespace fedlab
