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
#include "fedlab/compressors.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support/oracles.h"

namespace fedlab {
namespace {

using fedlab_test::gaussian_vector;

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

std::vector<CompressorDescriptor> unbiased_catalog() {
  return {natural_compressor(),
          standard_dither(2),
          natural_dither(3),
          exp_dither(3.0, 3),
          general_dither({0.25, 0.5, 1.0}),
          standard_dither(3, std::numeric_limits<double>::infinity()),
          natural_dither(2, 2.0, /*compress_norm=*/true),
          rand_k(2),
          nu_rand1(),
          wangni(2),
          unbiased_rounding(2.0),
          unbiased_rounding(3.0),
          compose(natural_compressor(), rand_k(2)),
          compose(natural_compressor(), natural_compressor()),
          induce(top_k(2), rand_k(2)),
          induce(biased_rounding(2.0), natural_compressor())};
}

// c_nat -----------------------------------------------------------------------

TEST(NaturalCompression, RoundsTwoPointFiveToNeighbouringPowers) {
  RandomStream rng(1);
  int low = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = c_nat_scalar(2.5, rng);
    ASSERT_TRUE(v == 2.0 || v == 4.0);
    low += v == 2.0;
  }
  EXPECT_NEAR(low / static_cast<double>(n), 0.75, 0.01);
}

TEST(NaturalCompression, PowersOfTwoAndZeroAreFixed) {
  RandomStream rng(2);
  for (double t : {1.0, -1.0, 0.5, 1024.0, -0.125, 0.0})
    EXPECT_EQ(c_nat_scalar(t, rng), t);
}

TEST(NaturalCompression, NegativeInputKeepsSign) {
  RandomStream rng(3);
  std::set<double> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(c_nat_scalar(-2.75, rng));
  EXPECT_EQ(seen, (std::set<double>{-4.0, -2.0}));
}

TEST(NaturalCompression, RejectsNonFinite) {
  RandomStream rng(4);
  EXPECT_THROW(c_nat_scalar(std::nan(""), rng), InvalidArgument);
  EXPECT_THROW(c_nat_scalar(std::numeric_limits<double>::infinity(), rng),
               InvalidArgument);
}

TEST(NaturalCompression, FlushesBelowSmallestNormalFloat) {
  RandomStream rng(5);
  EXPECT_EQ(c_nat_scalar(1e-39, rng), 0.0);
  EXPECT_EQ(c_nat_scalar(-1e-40, rng), 0.0);
}

TEST(NaturalCompression, ProbabilityMatchesClosedForm) {
  for (double t : {3.0, 0.3, 5.5, -7.25}) {
    const double a = std::abs(t);
    const double lo = std::exp2(std::floor(std::log2(a)));
    const double p_low = (2.0 * lo - a) / lo;
    RandomStream rng(6);
    int low = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) low += std::abs(c_nat_scalar(t, rng)) == lo;
    EXPECT_NEAR(low / static_cast<double>(n), p_low,
                4.0 * std::sqrt(p_low * (1 - p_low) / n) + 1e-12)
        << t;
  }
}

// compress ------------------------------------------------------------------

TEST(Compress, TopOneOnCounterexampleGradient) {
  const double t = 1.7;
  const Vector g = (t / 2.0) * vec({-11, 9, 9});
  RandomStream rng(1);
  const Vector out = compress(top_k(1), g, rng);
  EXPECT_EQ(out, (t / 2.0) * vec({-11, 0, 0}));
}

TEST(Compress, TopKBreaksTiesTowardLowerIndex) {
  RandomStream rng(1);
  EXPECT_EQ(compress(top_k(1), vec({2, -2, 2}), rng), vec({2, 0, 0}));
  EXPECT_EQ(compress(top_k(2), vec({1, 3, -3, 3}), rng), vec({0, 3, -3, 0}));
}

TEST(Compress, RandKWithFullBudgetIsIdentity) {
  RandomStream rng(2);
  const Vector x = vec({1.5, -2, 0.25, 7});
  EXPECT_EQ(compress(rand_k(4), x, rng), x);
}

TEST(Compress, NuRandOneMatchesEnumeratedOutcomes) {
  const Vector x = vec({1, -3});
  const auto outcomes = fedlab_test::nu_rand1_outcomes(x);
  ASSERT_EQ(outcomes.size(), 2u);
  EXPECT_DOUBLE_EQ(outcomes[0].probability, 0.25);
  EXPECT_EQ(outcomes[0].value, vec({4, 0}));
  EXPECT_DOUBLE_EQ(outcomes[1].probability, 0.75);
  EXPECT_EQ(outcomes[1].value, vec({0, -4}));
  EXPECT_EQ(fedlab_test::outcome_mean(outcomes), x);

  RandomStream rng(3);
  int second = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const Vector out = compress(nu_rand1(), x, rng);
    ASSERT_TRUE(out == outcomes[0].value || out == outcomes[1].value);
    second += out == outcomes[1].value;
  }
  EXPECT_NEAR(second / static_cast<double>(n), 0.75, 0.01);
}

TEST(Compress, ZeroVectorIsReturnedUnchanged) {
  auto catalog = unbiased_catalog();
  for (auto c : {top_k(1), biased_rand_sparse({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}),
                 adaptive_sparse(), biased_rounding(2.0), identity_compressor()})
    catalog.push_back(c);
  const Vector zero = Vector::Zero(6);
  for (const auto& c : catalog) {
    RandomStream rng(4);
    EXPECT_EQ(compress(c, zero, rng), zero) << to_string(c);
  }
}

TEST(Compress, InvalidParametersAreRejected) {
  EXPECT_THROW(rand_k(0), InvalidArgument);
  EXPECT_THROW(standard_dither(0), InvalidArgument);
  EXPECT_THROW(natural_dither(2, 0.5), InvalidArgument);
  EXPECT_THROW(exp_dither(1.0, 3), InvalidArgument);
  EXPECT_THROW(general_dither({0.5, 0.25, 1.0}), InvalidArgument);
  EXPECT_THROW(general_dither({0.25, 0.5}), InvalidArgument);
  EXPECT_THROW(unbiased_rounding(1.0), InvalidArgument);
  EXPECT_THROW(biased_rand_sparse({0.5, 0.0}), InvalidArgument);
  RandomStream rng(5);
  EXPECT_THROW(compress(top_k(4), vec({1, 2, 3}), rng), InvalidArgument);
  EXPECT_THROW(compress(natural_compressor(), vec({1, std::nan("")}), rng),
               InvalidArgument);
}

TEST(Compress, SparsifiersRespectBudget) {
  RandomStream data(6);
  for (int t = 0; t < 200; ++t) {
    const Vector x = gaussian_vector(10, data);
    RandomStream rng = make_stream(6, Purpose::kMonteCarlo, t);
    EXPECT_LE((compress(rand_k(3), x, rng).array() != 0).count(), 3);
    EXPECT_LE((compress(top_k(3), x, rng).array() != 0).count(), 3);
    EXPECT_LE((compress(nu_rand1(), x, rng).array() != 0).count(), 1);
    EXPECT_LE((compress(adaptive_sparse(), x, rng).array() != 0).count(), 1);
  }
}

TEST(Compress, DeterministicForIdenticalSeed) {
  RandomStream data(7);
  const Vector x = gaussian_vector(12, data);
  for (const auto& c : unbiased_catalog()) {
    RandomStream a = make_stream(99, Purpose::kWorkerCompression, 4, 2);
    RandomStream b = make_stream(99, Purpose::kWorkerCompression, 4, 2);
    const Vector ua = compress(c, x, a);
    const Vector ub = compress(c, x, b);
    EXPECT_EQ(0, std::memcmp(ua.data(), ub.data(), sizeof(double) * 12))
        << to_string(c);
  }
}

// Statistical unbiasedness: every coordinate of the sample mean lies within
// four standard errors of x.
TEST(Compress, UnbiasedKindsHaveMeanX) {
  RandomStream data(8);
  const Vector x = gaussian_vector(6, data);
  const int n = 100000;
  for (const auto& c : unbiased_catalog()) {
    ASSERT_TRUE(is_unbiased(c)) << to_string(c);
    Vector sum = Vector::Zero(6), sq = Vector::Zero(6);
    RandomStream rng = make_stream(8, Purpose::kMonteCarlo);
    for (int t = 0; t < n; ++t) {
      const Vector out = compress(c, x, rng);
      sum += out;
      sq += out.cwiseProduct(out);
    }
    const Vector mean = sum / n;
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double var = std::max(sq(i) / n - mean(i) * mean(i), 0.0);
      EXPECT_LE(std::abs(mean(i) - x(i)), 4.0 * std::sqrt(var / n) + 1e-10 * (1.0 + std::abs(x(i))))
          << to_string(c) << " coordinate " << i;
    }
  }
}

TEST(Compress, SecondMomentWithinDeclaredOmega) {
  const std::size_t d = 10;
  const int vectors = 10000;
  for (const auto& c : unbiased_catalog()) {
    const double omega = *declared_class(c, d).omega;
    RandomStream data = make_stream(9, Purpose::kDataGeneration);
    double sum = 0.0, sq = 0.0;
    for (int v = 0; v < vectors; ++v) {
      const Vector x = gaussian_vector(d, data);
      const double r = empirical_second_moment(
          c, x, 1, make_stream(9, Purpose::kMonteCarlo, v));
      sum += r;
      sq += r * r;
    }
    const double mean = sum / vectors;
    const double se = std::sqrt(std::max(sq / vectors - mean * mean, 0.0) / vectors);
    EXPECT_LE(mean, (1.0 + omega) + 4.0 * se) << to_string(c);
  }
}

TEST(Compress, ContractiveKindsSatisfyDeltaPointwise) {
  RandomStream data(10);
  const std::size_t d = 8;
  for (const auto& c : {top_k(1), top_k(3), top_k(8), biased_rounding(2.0),
                        biased_rounding(3.0),
                        biased_rounding(std::vector<double>{1e-9, 0.01, 0.1, 0.5, 1, 4, 100}),
                        compose(natural_compressor(), top_k(2))}) {
    const CompressorClass cls = declared_class(c, d);
    ASSERT_TRUE(cls.delta.has_value());
    for (int t = 0; t < 2000; ++t) {
      const Vector x = gaussian_vector(d, data);
      RandomStream rng = make_stream(10, Purpose::kMonteCarlo, t);
      const Vector out = cls.delta_scale * compress(c, x, rng);
      if (c.kind == CompressorKind::kCompose) continue;  // holds in mean only
      EXPECT_LE((out - x).squaredNorm(),
                (1.0 - 1.0 / *cls.delta) * x.squaredNorm() * (1 + 1e-12))
          << to_string(c);
    }
  }
}

TEST(Compress, BiasedClassesHoldPointwise) {
  RandomStream data(11);
  const std::size_t d = 8;
  for (const auto& c : {top_k(2), biased_rounding(2.0), biased_rounding(5.0)}) {
    const CompressorClass cls = declared_class(c, d);
    const double a = *cls.alpha, b = *cls.beta, g = *cls.gamma;
    for (int t = 0; t < 2000; ++t) {
      const Vector x = gaussian_vector(d, data);
      RandomStream rng(1);
      const Vector cx = compress(c, x, rng);
      const double nx = x.squaredNorm(), nc = cx.squaredNorm(), ip = cx.dot(x);
      const double tol = 1e-12 * nx;
      // first class
      EXPECT_LE(a * nx, nc + tol) << to_string(c);
      EXPECT_LE(nc, b * ip + tol) << to_string(c);
      // second class
      EXPECT_LE(std::max(g * nx, nc / b), ip + tol) << to_string(c);
      // scaled by 1/beta the operator is contractive with delta = beta^2/alpha
      EXPECT_LE((cx / b - x).squaredNorm(), (1.0 - a / (b * b)) * nx + tol)
          << to_string(c);
    }
  }
}

TEST(Compress, ScaledRandKIsContractive) {
  // Rand-k scaled by k/d keeps a uniform random subset unchanged; exhaustive
  // enumeration gives E||(k/d) C(x) - x||^2 = (1 - k/d) ||x||^2 and
  // E||C(x) - x||^2 = (d/k - 1) ||x||^2.
  RandomStream data(12);
  for (std::size_t d = 2; d <= 6; ++d) {
    for (std::size_t k = 1; k <= d; ++k) {
      const Vector x = gaussian_vector(d, data);
      const auto outcomes = fedlab_test::rand_k_outcomes(x, k);
      const double scale = static_cast<double>(k) / static_cast<double>(d);
      double restricted = 0.0;
      for (const auto& o : outcomes)
        restricted += o.probability * (scale * o.value - x).squaredNorm();
      EXPECT_NEAR(restricted, (1.0 - scale) * x.squaredNorm(), 1e-12);
      EXPECT_NEAR(fedlab_test::outcome_variance(outcomes, x),
                  (1.0 / scale - 1.0) * x.squaredNorm(), 1e-12);
      EXPECT_NEAR(*declared_class(rand_k(k), d).omega, 1.0 / scale - 1.0, 1e-15);
      EXPECT_TRUE((fedlab_test::outcome_mean(outcomes) - x).norm() < 1e-12);
    }
  }
}

TEST(Compress, DitherOutputsLieOnLevels) {
  RandomStream data(13);
  for (const auto& c :
       {standard_dither(3), natural_dither(4), exp_dither(3.0, 3),
        general_dither({0.1, 0.3, 1.0}),
        natural_dither(3, std::numeric_limits<double>::infinity()),
        standard_dither(5, 1.0), natural_dither(3, 2.0, true)}) {
    const auto levels = dither_levels(c);
    ASSERT_EQ(levels.back(), 1.0);
    for (int t = 0; t < 200; ++t) {
      const Vector x = gaussian_vector(16, data);
      RandomStream rng = make_stream(13, Purpose::kMonteCarlo, t);
      const DitheredVector msg = dither_encode(c, x, rng);
      const Vector out = dither_decode(c, msg);
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double r = std::abs(out(i)) / msg.norm;
        const std::uint32_t code = msg.level[static_cast<std::size_t>(i)];
        if (code == 0) {
          EXPECT_EQ(out(i), 0.0);
        } else {
          EXPECT_DOUBLE_EQ(r, levels[code - 1]) << to_string(c);
        }
      }
    }
  }
}

TEST(Compress, NaturalDitherLevelsArePowersOfTwo) {
  EXPECT_EQ(dither_levels(natural_dither(4)),
            (std::vector<double>{0.125, 0.25, 0.5, 1.0}));
  EXPECT_EQ(dither_levels(standard_dither(4)),
            (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}

// compose / induce ------------------------------------------------------------

TEST(Compose, DeclaredOmegaFollowsProductRule) {
  const std::size_t d = 20, k = 4;
  EXPECT_NEAR(*declared_class(compose(natural_compressor(), rand_k(k)), d).omega,
              9.0 * d / (8.0 * k) - 1.0, 1e-15);
  EXPECT_EQ(*declared_class(compose(identity_compressor(), rand_k(k)), d).omega,
            *declared_class(rand_k(k), d).omega);
  EXPECT_DOUBLE_EQ(
      *declared_class(compose(natural_compressor(), natural_compressor()), d).omega,
      17.0 / 64.0);
}

TEST(Compose, NaturalTwiceStaysWithinDeclaredVariance) {
  const auto c = compose(natural_compressor(), natural_compressor());
  RandomStream data = make_stream(14, Purpose::kDataGeneration);
  double worst = 0.0;
  for (int v = 0; v < 10000; ++v) {
    const Vector x = gaussian_vector(100, data);
    worst = std::max(worst, empirical_variance(
                                c, x, 1, make_stream(14, Purpose::kMonteCarlo, v)));
  }
  EXPECT_LE(worst, 17.0 / 64.0);
}

TEST(Compose, BiasedOuterStageIsRejected) {
  EXPECT_THROW(compose(top_k(1), natural_compressor()), InvalidArgument);
  EXPECT_THROW(compose(natural_compressor(), biased_rounding(2.0)),
               InvalidArgument);
}

TEST(Induce, TopKWithWangniIsUnbiased) {
  const auto c = induce(top_k(2), wangni(2));
  RandomStream data(15);
  const Vector x = gaussian_vector(5, data);
  const int n = 100000;
  Vector sum = Vector::Zero(5), sq = Vector::Zero(5);
  RandomStream rng = make_stream(15, Purpose::kMonteCarlo);
  for (int t = 0; t < n; ++t) {
    const Vector out = compress(c, x, rng);
    sum += out;
    sq += out.cwiseProduct(out);
  }
  const Vector mean = sum / n;
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double var = std::max(sq(i) / n - mean(i) * mean(i), 0.0);
    EXPECT_LE(std::abs(mean(i) - x(i)), 3.0 * std::sqrt(var / n) + 1e-10 * (1.0 + std::abs(x(i))))
        << i;
  }
}

TEST(Induce, IdentityFirstStageLeavesNoResidual) {
  RandomStream data(16);
  const Vector x = gaussian_vector(7, data);
  RandomStream rng(1);
  EXPECT_EQ(compress(induce(identity_compressor(), rand_k(2)), x, rng), x);
  EXPECT_EQ(*declared_class(induce(identity_compressor(), rand_k(2)), 7).omega,
            0.0);
}

TEST(Induce, EqualDeltasShrinkTheConstant) {
  const std::size_t d = 12, k = 3;
  const double delta = static_cast<double>(d) / k;
  const auto cls = declared_class(induce(top_k(k), wangni(k)), d);
  EXPECT_NEAR(*cls.omega + 1.0, delta - (1.0 - 1.0 / delta), 1e-14);
  EXPECT_LT(*cls.omega + 1.0, delta);
}

// variance and bits -----------------------------------------------------------

TEST(EmpiricalVariance, IdentityIsZeroAndZeroVectorRejected) {
  RandomStream data(17);
  const Vector x = gaussian_vector(9, data);
  EXPECT_EQ(empirical_variance(identity_compressor(), x, 5, RandomStream(1)), 0.0);
  EXPECT_THROW(empirical_variance(natural_compressor(), Vector::Zero(3), 5,
                                  RandomStream(1)),
               InvalidArgument);
  EXPECT_THROW(empirical_variance(natural_compressor(), x, 0, RandomStream(1)),
               InvalidArgument);
}

TEST(EmpiricalVariance, NaturalStaysBelowOneEighth) {
  RandomStream data = make_stream(18, Purpose::kDataGeneration);
  for (int v = 0; v < 200; ++v) {
    const Vector x = gaussian_vector(1000, data);
    EXPECT_LE(empirical_variance(natural_compressor(), x, 1,
                                 make_stream(18, Purpose::kMonteCarlo, v)),
              0.125 + 0.01);
  }
}

TEST(Bits, TableRows) {
  EXPECT_EQ(bits_per_message(natural_compressor(), 1000000), 9000000u);
  EXPECT_EQ(bits_per_message(identity_compressor(), 1), 32u);
  // sparse index bits: ceil(log2 1000) = 10
  EXPECT_EQ(bits_per_message(rand_k(100), 1000), (33u + 10u) * 100u);
  EXPECT_EQ(bits_per_message(compose(natural_compressor(), rand_k(100)), 1000),
            (10u + 10u) * 100u);
  // eight levels = 2^(4-1): 31 + d (2 + 4)
  EXPECT_EQ(bits_per_message(standard_dither(8), 1000), 31u + 1000u * 6u);
  EXPECT_EQ(bits_per_message(natural_dither(8), 1000), 31u + 1000u * 5u);
}

TEST(Bits, TopKWithNaturalDitheringAddsIndexAndLevelBits) {
  // index bits q (1 + ceil log2 d) plus a dithered message of length q
  const auto c = compose(natural_dither(4), top_k(50));
  EXPECT_EQ(bits_per_message(c, 1000), 50u * (1u + 10u) + 31u + 50u * (2u + 2u));
}

TEST(Bits, ZeroDimensionRejected) {
  EXPECT_THROW(bits_per_message(natural_compressor(), 0), InvalidArgument);
}

// text form -------------------------------------------------------------------

TEST(Descriptor, TextRoundTrip) {
  auto catalog = unbiased_catalog();
  catalog.push_back(top_k(3));
  catalog.push_back(biased_rand_sparse({0.5, 0.25}));
  catalog.push_back(biased_rounding(std::vector<double>{0.5, 1, 2}));
  catalog.push_back(adaptive_sparse());
  for (const auto& c : catalog) {
    const std::string text = to_string(c);
    EXPECT_EQ(parse_compressor(text), c) << text;
  }
  EXPECT_EQ(parse_compressor("compose(natural, rand_k(k=10))"),
            compose(natural_compressor(), rand_k(10)));
}

TEST(Descriptor, ParseErrors) {
  EXPECT_THROW(parse_compressor("bogus"), InvalidArgument);
  EXPECT_THROW(parse_compressor("rand_k"), InvalidArgument);
  EXPECT_THROW(parse_compressor("rand_k(k=2"), InvalidArgument);
  EXPECT_THROW(parse_compressor("rand_k(k=2,j=3)"), InvalidArgument);
  EXPECT_THROW(parse_compressor("rand_k(k=x)"), InvalidArgument);
}

TEST(Descriptor, DeclaredConstantsMatchCatalog) {
  const std::size_t d = 40;
  EXPECT_DOUBLE_EQ(*declared_class(top_k(5), d).delta, 8.0);
  EXPECT_DOUBLE_EQ(*declared_class(rand_k(5), d).omega, 7.0);
  EXPECT_DOUBLE_EQ(*declared_class(natural_compressor(), d).omega, 0.125);
  EXPECT_DOUBLE_EQ(*declared_class(nu_rand1(), d).omega, d - 1.0);
  EXPECT_DOUBLE_EQ(*declared_class(adaptive_sparse(), d).delta, 40.0);
  const auto br = declared_class(biased_rounding(2.0), d);
  EXPECT_DOUBLE_EQ(*br.delta, 9.0 / 8.0);
  EXPECT_DOUBLE_EQ(*declared_class(unbiased_rounding(2.0), d).omega, 1.0 / 8.0);
  EXPECT_FALSE(declared_class(top_k(5), d).omega.has_value());
  for (const auto& c : unbiased_catalog()) {
    const auto cls = declared_class(c, 10);
    EXPECT_GE(*cls.omega, 0.0) << to_string(c);
  }
}

}  // namespace
}  // namespace fedlab
