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
#include "fedlab/ordered_dropout.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedlab/linalg.h"

namespace fedlab {
namespace {

constexpr double kWidthSlack = 1e-12;
constexpr double kGapThreshold = 1e-6;

Matrix initial_block(Eigen::Index rows, Eigen::Index cols, double bound,
                     RandomStream& rng) {
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      out(i, j) = bound * (2.0 * rng.uniform() - 1.0);
  return out;
}

double expected_loss(const LinearOdModel& model, const Matrix& a,
                     const DropoutDistribution& dist) {
  double total = 0.0;
  for (std::size_t t = 0; t < dist.fractions().size(); ++t)
    total += dist.probabilities()[t] *
             (truncate(model, dist.fractions()[t]) - a).squaredNorm();
  return total;
}

}  // namespace

DropoutDistribution DropoutDistribution::uniform(std::size_t k) {
  require(k >= 1, "dropout distribution: k must be >= 1");
  std::vector<double> fractions(k);
  for (std::size_t i = 0; i < k; ++i)
    fractions[i] = static_cast<double>(i + 1) / static_cast<double>(k);
  return custom(std::move(fractions),
                std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

DropoutDistribution DropoutDistribution::custom(
    std::vector<double> fractions, std::vector<double> probabilities) {
  require(!fractions.empty(), "dropout distribution: empty support");
  require(fractions.size() == probabilities.size(),
          "dropout distribution: fractions and probabilities differ in size");
  double total = 0.0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    require(fractions[i] > 0.0 && fractions[i] <= 1.0,
            "dropout distribution: fractions must lie in (0, 1]");
    require(i == 0 || fractions[i] > fractions[i - 1],
            "dropout distribution: fractions must be increasing");
    require(probabilities[i] > 0.0,
            "dropout distribution: probabilities must be positive");
    total += probabilities[i];
  }
  require(std::abs(total - 1.0) <= 1e-12,
          "dropout distribution: probabilities must sum to 1");
  DropoutDistribution d;
  d.fractions_ = std::move(fractions);
  d.probabilities_ = std::move(probabilities);
  return d;
}

double DropoutDistribution::sample(RandomStream& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < fractions_.size(); ++i) {
    acc += probabilities_[i];
    if (u < acc) return fractions_[i];
  }
  return fractions_.back();
}

bool DropoutDistribution::covers(std::size_t K) const {
  std::vector<bool> hit(K + 1, false);
  for (double p : fractions_) hit[active_units(p, K)] = true;
  for (std::size_t b = 1; b <= K; ++b)
    if (!hit[b]) return false;
  return true;
}

std::size_t active_units(double p, std::size_t K) {
  require(std::isfinite(p) && p > 0.0 && p <= 1.0,
          "ordered dropout: width fraction must lie in (0, 1]");
  require(K >= 1, "ordered dropout: width must be >= 1");
  const double scaled = p * static_cast<double>(K);
  const auto b = static_cast<std::size_t>(std::ceil(scaled - kWidthSlack));
  return std::clamp<std::size_t>(b, 1, K);
}

Matrix truncate_units(const LinearOdModel& model, std::size_t b) {
  require(b >= 1 && b <= model.width(),
          "ordered dropout: unit count out of range");
  const auto k = static_cast<Eigen::Index>(b);
  return model.U.leftCols(k) * model.V.topRows(k);
}

Matrix truncate(const LinearOdModel& model, double p) {
  return truncate_units(model, active_units(p, model.width()));
}

double singular_gap(const Matrix& a) {
  const Vector s = jacobi_svd(a).sigma;
  double gap = s(s.size() - 1);
  for (Eigen::Index i = 0; i + 1 < s.size(); ++i)
    gap = std::min(gap, s(i) - s(i + 1));
  return gap;
}

OdTrainResult od_train(const Matrix& a, std::size_t K,
                       const DropoutDistribution& distribution,
                       const OdTrainOptions& options) {
  require(a.allFinite() && a.size() > 0, "od_train: invalid target matrix");
  require(K >= 1 && K <= static_cast<std::size_t>(std::min(a.rows(), a.cols())),
          "od_train: width must lie in [1, min(m, n)]");
  require(options.restarts >= 1, "od_train: restarts must be >= 1");
  require(options.eta > 0.0, "od_train: eta must be positive");

  OdTrainResult result;
  const Svd svd = jacobi_svd(a);
  if (!distribution.covers(K))
    result.warnings.push_back(
        "dropout distribution does not reach every width; the recovery "
        "guarantee does not apply");
  if (static_cast<std::size_t>(std::min(a.rows(), a.cols())) != K)
    result.warnings.push_back(
        "width differs from min(m, n); the recovery guarantee does not apply");
  if (singular_gap(a) <= kGapThreshold)
    result.warnings.push_back(
        "singular values are not distinct or the matrix is rank deficient");

  const double spectral = svd.sigma(0);
  const double scale = spectral > 0.0 ? spectral : 1.0;
  const Matrix target = a / scale;
  const double bound = 1.0 / std::sqrt(static_cast<double>(K));
  const auto width = static_cast<Eigen::Index>(K);

  result.objective = std::numeric_limits<double>::infinity();
  for (std::size_t restart = 0; restart < options.restarts; ++restart) {
    RandomStream init =
        make_stream(options.seed, Purpose::kInitialization, 0, restart);
    LinearOdModel model{initial_block(a.rows(), width, bound, init),
                        initial_block(width, a.cols(), bound, init)};
    RandomStream widths =
        make_stream(options.seed, Purpose::kDropoutWidth, 0, restart);
    for (std::size_t step = 0; step < options.steps; ++step) {
      const auto b = static_cast<Eigen::Index>(
          active_units(distribution.sample(widths), K));
      auto u = model.U.leftCols(b);
      auto v = model.V.topRows(b);
      const Matrix residual = u * v - target;
      const Matrix grad_u = 2.0 * residual * v.transpose();
      const Matrix grad_v = 2.0 * u.transpose() * residual;
      u -= options.eta * grad_u;
      v -= options.eta * grad_v;
    }
    if (!model.U.allFinite() || !model.V.allFinite()) continue;
    const double loss = expected_loss(model, target, distribution);
    if (loss < result.objective) {
      result.objective = loss;
      result.model = std::move(model);
    }
  }
  require(std::isfinite(result.objective),
          "od_train: every restart diverged; reduce eta");
  const double root = std::sqrt(scale);
  result.model.U *= root;
  result.model.V *= root;
  result.objective *= scale * scale;
  return result;
}

std::vector<double> width_errors(const LinearOdModel& model, const Matrix& a) {
  std::vector<double> out;
  for (std::size_t b = 1; b <= model.width(); ++b)
    out.push_back((truncate_units(model, b) - best_rank(a, b)).norm());
  return out;
}

}  // namespace fedlab
