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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedlab/algorithms.h"
#include "support/oracles.h"

namespace fedlab {
namespace {

FiniteSumProblem small_logistic(std::size_t clients = 4, std::size_t m = 5,
                                std::size_t d = 4) {
  SyntheticLogisticOptions o;
  o.clients = clients;
  o.samples_per_client = m;
  o.dim = d;
  o.lambda2 = 0.1;
  o.seed = 21;
  return synthetic_logistic(o);
}

double strongly_convex_gamma(const FiniteSumProblem& p, double omega) {
  const SmoothnessInfo s = p.smoothness();
  const double n = static_cast<double>(p.clients());
  return std::min(2.0 / ((s.mu + s.L) * (1.0 + 6.0 * omega / n)),
                  1.0 / (2.0 * s.mu * (omega + 1.0)));
}

// DIANA ------------------------------------------------------------------------------

TEST(Diana, ShiftMeanIsMaintainedFromMessages) {
  const auto p = small_logistic();
  DianaConfig c;
  c.compressor = rand_k(2);
  c.gamma = strongly_convex_gamma(p, 1.0);
  c.rounds = 200;
  RunOptions o;
  o.seed = 3;
  const Trajectory t = diana(p, c, o);
  for (double e : t.series.at("shift_mean_error")) EXPECT_LE(e, 1e-12);
}

TEST(Diana, IdentityWithFullStepIsGradientDescent) {
  const auto p = small_logistic();
  DianaConfig c;
  c.gamma = 0.5;
  c.rounds = 30;
  RunOptions o;
  o.x0 = Vector::Ones(4);
  const Trajectory t = diana(p, c, o);
  EXPECT_EQ(diana_alpha(c, 4), 1.0);
  Vector x = *o.x0;
  for (int k = 0; k < 30; ++k) x -= 0.5 * p.grad_full(x);
  EXPECT_LE((t.final_x - x).norm(), 1e-13);
}

TEST(Diana, AlphaMustNotExceedInverseOmegaPlusOne) {
  DianaConfig c;
  c.compressor = rand_k(1);  // omega = 3 at d = 4
  EXPECT_DOUBLE_EQ(diana_alpha(c, 4), 0.25);
  c.alpha = 0.3;
  EXPECT_THROW(diana_alpha(c, 4), InvalidArgument);
  c.alpha = 0.1;
  EXPECT_EQ(diana_alpha(c, 4), 0.1);
  c.compressor = top_k(1);
  c.alpha = 0.0;
  EXPECT_THROW(diana_alpha(c, 4), InvalidArgument);
}

TEST(Diana, LyapunovContractsInConditionalExpectation) {
  const auto p = small_logistic();
  const std::size_t k = 2;
  const double omega = 1.0;
  DianaConfig c;
  c.compressor = rand_k(k);
  c.gamma = strongly_convex_gamma(p, omega);
  const double alpha = 1.0 / (omega + 1.0);
  const double cc = 4.0 * omega / (alpha * 4.0);
  const fedlab_test::DianaParams params{c.gamma, alpha, cc, k};
  const double rate = 1.0 - c.gamma * p.smoothness().mu;
  DianaState s = diana_init(p, Vector::Constant(4, 2.0));
  for (int r = 0; r < 300; ++r) {
    const double psi = fedlab_test::diana_lyapunov_value(p, s, params);
    if (psi < 1e-20) break;  // below rounding noise
    EXPECT_NEAR(diana_lyapunov(p, c, s), psi, 1e-12 * psi);
    const double next = fedlab_test::diana_expected_lyapunov(p, s, params);
    ASSERT_LE(next, rate * psi * (1.0 + 1e-12)) << "round " << r;
    diana_step(p, c, s, 9);
  }
}

TEST(Diana, BitsPerRound) {
  const auto p = small_logistic();
  DianaConfig c;
  c.compressor = natural_compressor();
  c.gamma = 0.1;
  c.rounds = 2;
  const Trajectory t = diana(p, c);
  EXPECT_EQ(t.records[1].bits_up, 4u * 9 * 4);
  EXPECT_EQ(t.records[1].bits_down, 4u * 32 * 4);
  EXPECT_EQ(t.records[1].participants.size(), 4u);
}

// VR-DIANA ---------------------------------------------------------------------------

TEST(VrDiana, ConstantsFollowTheoryFormulas) {
  const auto p = small_logistic(8, 50, 6);
  VrDianaConfig c;
  c.compressor = rand_k(2);
  const VrDianaConstants k = vr_diana_constants(p, c);
  const SmoothnessInfo s = p.smoothness();
  const double omega = 2.0, n = 8.0, m = 50.0;
  const double alpha = 1.0 / 3.0;
  EXPECT_DOUBLE_EQ(k.alpha, alpha);
  EXPECT_DOUBLE_EQ(k.b, 4.0 * (omega + 1) / (alpha * n * n));
  EXPECT_DOUBLE_EQ(k.c, 16.0 * (omega + 1) / (alpha * n * n));
  EXPECT_DOUBLE_EQ(k.gamma, 1.0 / (s.L * (1 + 36 * (omega + 1) / n)));
  EXPECT_DOUBLE_EQ(k.rho, std::min({s.mu / (s.L * (1 + 36 * (omega + 1) / n)),
                                    alpha / 2, 3 / (8 * m)}));
  c.gamma = 0.01;
  EXPECT_EQ(vr_diana_constants(p, c).gamma, 0.01);
}

TEST(VrDiana, RequiresEqualComponentCounts) {
  const std::vector<std::size_t> counts = {1, 2};
  const auto p = quadratic_anchors(counts, 2);
  EXPECT_THROW(vr_diana_constants(p, VrDianaConfig{}), InvalidArgument);
}

TEST(VrDiana, SagaWithoutCompressionMatchesReferenceSaga) {
  const auto p = small_logistic(1, 6, 3);
  VrDianaConfig c;
  c.variant = VrVariant::kSaga;
  c.alpha = 1.0;
  c.gamma = 0.3;
  c.rounds = 100;
  RunOptions o;
  o.seed = 5;
  const Trajectory t = vr_diana(p, c, o);

  const std::size_t m = 6;
  Vector x = Vector::Zero(3);
  std::vector<Vector> table;
  Vector mean = Vector::Zero(3);
  for (std::size_t j = 0; j < m; ++j) {
    table.push_back(p.grad(0, j, x));
    mean += table.back() / static_cast<double>(m);
  }
  for (std::size_t k = 0; k < 100; ++k) {
    RandomStream pick = make_stream(5, Purpose::kStochasticGradient, k, 0);
    const std::size_t j = pick.below(m);
    const Vector fresh = p.grad(0, j, x);
    const Vector g = fresh - table[j] + mean;
    mean += (fresh - table[j]) / static_cast<double>(m);
    table[j] = fresh;
    x -= 0.3 * g;
  }
  EXPECT_LE((t.final_x - x).norm(), 1e-12);
}

TEST(VrDiana, SagaTableDistanceShrinks) {
  const auto p = small_logistic();
  VrDianaConfig c;
  c.variant = VrVariant::kSaga;
  c.compressor = rand_k(2);
  c.rounds = 3000;
  RunOptions o;
  o.x0 = Vector::Ones(4);
  const Trajectory t = vr_diana(p, c, o);
  const auto& dist = t.series.at("table_distance");
  EXPECT_LE(dist.back(), 1e-6 * dist.front());
}

TEST(VrDiana, LyapunovContractsInConditionalExpectation) {
  const auto p = small_logistic(3, 4, 3);
  const std::size_t k = 1;
  for (VrVariant variant : {VrVariant::kLsvrg, VrVariant::kSaga}) {
    VrDianaConfig c;
    c.compressor = rand_k(k);
    c.variant = variant;
    const VrDianaConstants cst = vr_diana_constants(p, c);
    const fedlab_test::VrParams params{cst.gamma, cst.alpha, cst.b, cst.c, k};
    VrDianaState s = vr_diana_init(p, Vector::Constant(3, -1.5));
    for (int r = 0; r < 200; ++r) {
      const double psi = fedlab_test::vr_lyapunov_value(p, s, params);
      if (psi < 1e-20) break;
      EXPECT_NEAR(vr_diana_lyapunov(p, c, s), psi, 1e-12 * psi);
      const double next = fedlab_test::vr_expected_lyapunov(p, s, params);
      ASSERT_LE(next, (1.0 - cst.rho) * psi * (1.0 + 1e-12)) << "round " << r;
      vr_diana_step(p, c, s, 17);
    }
  }
}

// SVRG-DIANA -------------------------------------------------------------------------

TEST(SvrgDiana, SingleComponentClientsWithoutCompressionAreGradientDescent) {
  // With m = 1 the control variate cancels the sampled gradient exactly.
  const auto p = small_logistic(4, 1, 4);
  SvrgDianaConfig c;
  c.alpha = 1.0;
  c.gamma = 0.5;
  c.epoch_length = 4;
  c.rounds = 40;
  RunOptions o;
  o.x0 = Vector::Ones(4);
  const Trajectory t = svrg_diana(p, c, o);
  Vector x = *o.x0;
  for (int k = 0; k < 40; ++k) x -= 0.5 * p.grad_full(x);
  EXPECT_LE((t.final_x - x).norm(), 1e-12);
}

TEST(SvrgDiana, AnchorAveragesThePreviousEpoch) {
  const auto p = small_logistic(2, 3, 3);
  SvrgDianaConfig c;
  c.alpha = 1.0;
  c.gamma = 0.2;
  c.epoch_length = 2;
  c.anchor_weights = {0.25, 0.75};
  c.rounds = 12;
  RunOptions o;
  o.seed = 4;
  o.x0 = Vector::Constant(3, 0.5);
  const Trajectory t = svrg_diana(p, c, o);

  Vector x = *o.x0, z = x;
  std::vector<Vector> epoch;
  for (std::size_t k = 0; k < 12; ++k) {
    if (k > 0 && k % 2 == 0) {
      z = 0.25 * epoch[0] + 0.75 * epoch[1];
      epoch.clear();
    }
    epoch.push_back(x);
    Vector g = Vector::Zero(3);
    for (std::size_t i = 0; i < 2; ++i) {
      RandomStream pick = make_stream(4, Purpose::kStochasticGradient, k, i);
      const std::size_t j = pick.below(3);
      g += p.weights()[i] *
           (p.grad(i, j, x) - p.grad(i, j, z) + p.grad_client(i, z));
    }
    x -= 0.2 * g;
  }
  EXPECT_LE((t.final_x - x).norm(), 1e-12);
}

TEST(SvrgDiana, ConvergesWithCompression) {
  const auto p = small_logistic();
  SvrgDianaConfig c;
  c.compressor = rand_k(2);
  c.epoch_length = 10;
  c.gamma = 0.2;
  c.rounds = 3000;
  RunOptions o;
  o.seed = 8;
  const Trajectory t = svrg_diana(p, c, o);
  EXPECT_LE(t.records.back().f_gap, 1e-10);
}

TEST(SvrgDiana, ValidatesEpochAndWeights) {
  const auto p = small_logistic();
  SvrgDianaConfig c;
  c.gamma = 0.1;
  c.epoch_length = 3;
  c.rounds = 10;
  EXPECT_THROW(svrg_diana(p, c), InvalidArgument);
  c.rounds = 9;
  c.anchor_weights = {0.5, 0.5};
  EXPECT_THROW(svrg_diana(p, c), InvalidArgument);
  c.anchor_weights = {0.5, 0.25, 0.2};
  EXPECT_THROW(svrg_diana(p, c), InvalidArgument);
  c.anchor_weights = {0.5, 0.25, 0.25};
  EXPECT_NO_THROW(svrg_diana(p, c));
}

}  // namespace
}  // namespace fedlab
