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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace fedlab {
namespace {

constexpr double kProbabilityTolerance = 1e-12;

void check_norms(std::span<const double> norms, std::size_t m,
                 const char* where) {
  require(!norms.empty(), std::string(where) + ": empty norm vector");
  bool any_positive = false;
  for (double u : norms) {
    require(std::isfinite(u) && u >= 0.0,
            std::string(where) + ": norms must be finite and nonnegative");
    any_positive = any_positive || u > 0.0;
  }
  require(any_positive, std::string(where) + ": all norms are zero");
  require(m >= 1 && m <= norms.size(),
          std::string(where) + ": budget m must lie in [1, n]");
}

// Positive-norm clients sorted by ascending norm, ties by index.
std::vector<std::size_t> ascending_support(std::span<const double> norms) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] > 0.0) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&norms](std::size_t a, std::size_t b) {
                     return norms[a] < norms[b];
                   });
  return order;
}

// Largest l with 0 < m + l - n <= sum_{i<=l} u_(i) / u_(l) over the
// ascending order; returns l and the partial sum.
std::pair<std::size_t, double> unsaturated_prefix(
    std::span<const double> norms, const std::vector<std::size_t>& order,
    std::size_t m) {
  const std::size_t n = order.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + norms[order[i]];
  for (std::size_t l = n; l >= 1; --l) {
    const double slack = static_cast<double>(m + l) - static_cast<double>(n);
    if (slack > 0.0 && slack <= prefix[l] / norms[order[l - 1]])
      return {l, prefix[l]};
  }
  // l = n - m + 1 always satisfies the condition.
  return {n - m + 1, prefix[n - m + 1]};
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

}  // namespace

SamplingScheme SamplingScheme::full(std::size_t n) {
  require(n >= 1, "sampling: n must be >= 1");
  SamplingScheme s;
  s.kind_ = SamplingKind::kFull;
  s.n_ = n;
  s.m_ = n;
  s.inclusion_.assign(n, 1.0);
  return s;
}

SamplingScheme SamplingScheme::uniform(std::size_t n, std::size_t m) {
  require(n >= 1, "sampling: n must be >= 1");
  require(m >= 1 && m <= n, "sampling: uniform subset size must lie in [1, n]");
  SamplingScheme s;
  s.kind_ = SamplingKind::kUniform;
  s.n_ = n;
  s.m_ = m;
  s.inclusion_.assign(n, static_cast<double>(m) / static_cast<double>(n));
  return s;
}

SamplingScheme SamplingScheme::independent(std::vector<double> p,
                                           bool allow_zero) {
  require(!p.empty(), "sampling: empty probability vector");
  for (double q : p) {
    require(std::isfinite(q) && q >= 0.0 && q <= 1.0,
            "sampling: probabilities must lie in [0, 1]");
    require(allow_zero || q > 0.0,
            "sampling: zero inclusion probability makes the scheme improper");
  }
  SamplingScheme s;
  s.kind_ = SamplingKind::kIndependent;
  s.n_ = p.size();
  s.inclusion_ = std::move(p);
  return s;
}

SamplingScheme SamplingScheme::enumerated(std::size_t n,
                                          std::vector<WeightedSubset> subsets) {
  require(n >= 1, "sampling: n must be >= 1");
  require(!subsets.empty(), "sampling: empty subset list");
  SamplingScheme s;
  s.kind_ = SamplingKind::kEnumerated;
  s.n_ = n;
  s.inclusion_.assign(n, 0.0);
  double total = 0.0;
  for (auto& subset : subsets) {
    require(subset.probability >= 0.0 && subset.probability <= 1.0,
            "sampling: subset probability outside [0, 1]");
    std::sort(subset.clients.begin(), subset.clients.end());
    require(std::adjacent_find(subset.clients.begin(), subset.clients.end()) ==
                subset.clients.end(),
            "sampling: repeated client in subset");
    for (std::size_t i : subset.clients) {
      require(i < n, "sampling: client index out of range");
      s.inclusion_[i] += subset.probability;
    }
    total += subset.probability;
  }
  require(std::abs(total - 1.0) <= kProbabilityTolerance,
          "sampling: subset probabilities must sum to 1");
  s.subsets_ = std::move(subsets);
  return s;
}

bool SamplingScheme::proper() const {
  return std::all_of(inclusion_.begin(), inclusion_.end(),
                     [](double q) { return q > 0.0; });
}

double SamplingScheme::expected_size() const {
  return std::accumulate(inclusion_.begin(), inclusion_.end(), 0.0);
}

std::string SamplingScheme::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case SamplingKind::kFull:
      out << "full(n=" << n_ << ")";
      break;
    case SamplingKind::kUniform:
      out << "uniform(n=" << n_ << ",m=" << m_ << ")";
      break;
    case SamplingKind::kIndependent:
      out << "independent(n=" << n_ << ")";
      break;
    case SamplingKind::kEnumerated:
      out << "enumerated(n=" << n_ << ",subsets=" << subsets_.size() << ")";
      break;
  }
  return out.str();
}

ClientSet draw(const SamplingScheme& scheme, RandomStream& rng) {
  const std::size_t n = scheme.n();
  ClientSet out;
  switch (scheme.kind()) {
    case SamplingKind::kFull:
      out.resize(n);
      std::iota(out.begin(), out.end(), 0);
      break;
    case SamplingKind::kUniform: {
      std::vector<std::size_t> index(n);
      std::iota(index.begin(), index.end(), 0);
      for (std::size_t i = 0; i < scheme.m(); ++i)
        std::swap(index[i], index[i + rng.below(n - i)]);
      out.assign(index.begin(), index.begin() + scheme.m());
      std::sort(out.begin(), out.end());
      break;
    }
    case SamplingKind::kIndependent:
      for (std::size_t i = 0; i < n; ++i)
        if (rng.uniform() < scheme.inclusion()[i]) out.push_back(i);
      break;
    case SamplingKind::kEnumerated: {
      const double target = rng.uniform();
      double acc = 0.0;
      const auto& subsets = scheme.subsets();
      std::size_t chosen = subsets.size() - 1;
      for (std::size_t k = 0; k < subsets.size(); ++k) {
        acc += subsets[k].probability;
        if (target < acc) {
          chosen = k;
          break;
        }
      }
      out = subsets[chosen].clients;
      break;
    }
  }
  return out;
}

Matrix probability_matrix(const SamplingScheme& scheme) {
  const auto n = static_cast<Eigen::Index>(scheme.n());
  const auto& p = scheme.inclusion();
  Matrix P(n, n);
  switch (scheme.kind()) {
    case SamplingKind::kFull:
      P.setOnes();
      break;
    case SamplingKind::kUniform: {
      const double m = static_cast<double>(scheme.m());
      const double nn = static_cast<double>(n);
      const double pair = n > 1 ? m * (m - 1.0) / (nn * (nn - 1.0)) : 0.0;
      P.setConstant(pair);
      P.diagonal().setConstant(m / nn);
      break;
    }
    case SamplingKind::kIndependent:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          P(i, j) = i == j ? p[i] : p[i] * p[j];
      break;
    case SamplingKind::kEnumerated:
      P.setZero();
      for (const auto& subset : scheme.subsets())
        for (std::size_t i : subset.clients)
          for (std::size_t j : subset.clients) P(i, j) += subset.probability;
      break;
  }
  return P;
}

std::vector<WeightedSubset> enumerate_subsets(const SamplingScheme& scheme) {
  const std::size_t n = scheme.n();
  std::vector<WeightedSubset> out;
  switch (scheme.kind()) {
    case SamplingKind::kFull: {
      WeightedSubset all{ClientSet(n), 1.0};
      std::iota(all.clients.begin(), all.clients.end(), 0);
      out.push_back(std::move(all));
      break;
    }
    case SamplingKind::kUniform: {
      require(n <= 20, "enumerate_subsets: n > 20");
      const std::size_t m = scheme.m();
      const double prob = 1.0 / static_cast<double>(binomial(n, m));
      std::vector<bool> mask(n, false);
      std::fill(mask.begin(), mask.begin() + m, true);
      do {
        WeightedSubset subset{{}, prob};
        for (std::size_t i = 0; i < n; ++i)
          if (mask[i]) subset.clients.push_back(i);
        out.push_back(std::move(subset));
      } while (std::prev_permutation(mask.begin(), mask.end()));
      break;
    }
    case SamplingKind::kIndependent: {
      require(n <= 20, "enumerate_subsets: n > 20");
      const auto& p = scheme.inclusion();
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
        WeightedSubset subset{{}, 1.0};
        for (std::size_t i = 0; i < n; ++i) {
          if (bits >> i & 1) {
            subset.clients.push_back(i);
            subset.probability *= p[i];
          } else {
            subset.probability *= 1.0 - p[i];
          }
        }
        if (subset.probability > 0.0) out.push_back(std::move(subset));
      }
      break;
    }
    case SamplingKind::kEnumerated:
      for (const auto& subset : scheme.subsets())
        if (subset.probability > 0.0) out.push_back(subset);
      break;
  }
  return out;
}

std::vector<double> eso_v(const SamplingScheme& scheme) {
  require(scheme.proper(), "eso_v: sampling is not proper");
  const std::size_t n = scheme.n();
  const auto& p = scheme.inclusion();
  switch (scheme.kind()) {
    case SamplingKind::kFull:
      return std::vector<double>(n, 0.0);
    case SamplingKind::kUniform:
      if (n == 1) return {0.0};
      return std::vector<double>(
          n, static_cast<double>(n - scheme.m()) / static_cast<double>(n - 1));
    case SamplingKind::kIndependent: {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 - p[i];
      return v;
    }
    case SamplingKind::kEnumerated:
      break;
  }
  require(n <= 12,
          "eso_v: enumerated schemes are limited to n <= 12; use a "
          "closed-form sampling kind");
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::Map<const Eigen::VectorXd> pv(p.data(), nn);
  const Matrix gap = probability_matrix(scheme) - pv * pv.transpose();
  const auto certified = [&](double v) {
    Matrix m = gap;
    m.diagonal() -= v * pv;
    return max_eigenvalue(m) <= 1e-12;
  };
  double lo = 0.0;
  double hi = static_cast<double>(n);
  if (certified(lo)) return std::vector<double>(n, 0.0);
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (certified(mid) ? hi : lo) = mid;
  }
  return std::vector<double>(n, hi);
}

std::vector<double> eso_v_fallback(const SamplingScheme& scheme) {
  require(scheme.proper(), "eso_v: sampling is not proper");
  std::vector<double> v(scheme.n());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(scheme.n()) * (1.0 - scheme.inclusion()[i]);
  return v;
}

std::vector<double> optimal_probs(std::span<const double> norms,
                                  std::size_t m) {
  check_norms(norms, m, "optimal_probs");
  std::vector<double> p(norms.size(), 0.0);
  const auto order = ascending_support(norms);
  if (m >= order.size()) {
    for (std::size_t i : order) p[i] = 1.0;
    return p;
  }
  const auto [l, partial] = unsaturated_prefix(norms, order, m);
  const double scale = static_cast<double>(m + l) -
                       static_cast<double>(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    p[i] = r < l ? std::min(1.0, scale * norms[i] / partial) : 1.0;
  }
  return p;
}

AocsResult aocs_detailed(std::span<const double> norms, double m,
                         std::size_t j_max) {
  require(j_max >= 1, "aocs: j_max must be >= 1");
  require(!norms.empty(), "aocs: empty norm vector");
  require(m > 0.0, "aocs: budget must be positive");
  AocsResult result;
  result.p.assign(norms.size(), 0.0);
  double total = 0.0;
  std::size_t active = 0;
  for (double u : norms) {
    require(std::isfinite(u) && u >= 0.0, "aocs: norms must be nonnegative");
    total += u;
    if (u > 0.0) ++active;
  }
  require(total > 0.0, "aocs: all norms are zero");
  auto& p = result.p;
  if (m >= static_cast<double>(active)) {
    for (std::size_t i = 0; i < norms.size(); ++i) p[i] = norms[i] > 0.0 ? 1.0 : 0.0;
    result.converged = true;
    return result;
  }
  for (std::size_t i = 0; i < norms.size(); ++i)
    p[i] = std::min(m * norms[i] / total, 1.0);
  for (std::size_t j = 0; j < j_max; ++j) {
    std::size_t unsaturated = 0;
    double mass = 0.0;
    for (double q : p) {
      if (q > 0.0 && q < 1.0) {
        ++unsaturated;
        mass += q;
      }
    }
    if (unsaturated == 0) {
      result.converged = true;
      return result;
    }
    const double c = (m - static_cast<double>(active) +
                      static_cast<double>(unsaturated)) / mass;
    if (c <= 1.0 + 1e-12) {
      result.converged = true;
      return result;
    }
    for (double& q : p)
      if (q > 0.0 && q < 1.0) q = std::min(c * q, 1.0);
    ++result.rescalings;
  }
  return result;
}

std::vector<double> aocs(std::span<const double> norms, std::size_t m,
                         std::size_t j_max) {
  return aocs_detailed(norms, static_cast<double>(m), j_max).p;
}

double independent_sampling_variance(std::span<const double> norms,
                                     std::span<const double> p) {
  require(norms.size() == p.size(), "sampling variance: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] == 0.0) continue;
    require(p[i] > 0.0, "sampling variance: positive norm with p_i = 0");
    total += (1.0 - p[i]) / p[i] * norms[i] * norms[i];
  }
  return total;
}

double improvement_factor(std::span<const double> norms, std::size_t m) {
  check_norms(norms, m, "improvement_factor");
  const std::size_t n = norms.size();
  double sum_sq = 0.0;
  for (double u : norms) sum_sq += u * u;
  const double uniform_variance =
      static_cast<double>(n - m) / static_cast<double>(m) * sum_sq;
  require(uniform_variance > 0.0,
          "improvement_factor: uniform sampling has zero variance");
  const auto order = ascending_support(norms);
  if (order.size() <= m) return 0.0;
  const auto [l, partial] = unsaturated_prefix(norms, order, m);
  double partial_sq = 0.0;
  for (std::size_t r = 0; r < l; ++r)
    partial_sq += norms[order[r]] * norms[order[r]];
  const double slack = static_cast<double>(m + l) -
                       static_cast<double>(order.size());
  const double optimal_variance = partial * partial / slack - partial_sq;
  return std::clamp(optimal_variance / uniform_variance, 0.0, 1.0);
}

Vector unbiased_aggregate(const ClientSet& subset, std::span<const double> p,
                          const ClientUpdates& deltas,
                          std::span<const double> w) {
  require(p.size() == w.size(), "unbiased_aggregate: p and w sizes differ");
  require(!deltas.empty(), "unbiased_aggregate: no client updates");
  Vector out = Vector::Zero(deltas.begin()->second.size());
  for (std::size_t i : subset) {
    require(i < p.size(), "unbiased_aggregate: client index out of range");
    const auto it = deltas.find(i);
    require(it != deltas.end(), "unbiased_aggregate: missing update for "
                                "sampled client " + std::to_string(i));
    require(p[i] > 0.0, "unbiased_aggregate: sampled client " +
                            std::to_string(i) + " has p_i = 0");
    out += (w[i] / p[i]) * it->second;
  }
  return out;
}

Vector sum_one_aggregate(const ClientSet& subset, std::span<const double> w,
                         const ClientUpdates& deltas) {
  require(!subset.empty(), "sum_one_aggregate: empty subset");
  double total = 0.0;
  for (std::size_t i : subset) {
    require(i < w.size(), "sum_one_aggregate: client index out of range");
    total += w[i];
  }
  require(total > 0.0, "sum_one_aggregate: subset weights sum to zero");
  Vector out;
  for (std::size_t i : subset) {
    const auto it = deltas.find(i);
    require(it != deltas.end(), "sum_one_aggregate: missing update for "
                                "sampled client " + std::to_string(i));
    if (out.size() == 0) out = Vector::Zero(it->second.size());
    out += (w[i] / total) * it->second;
  }
  return out;
}

}  // namespace fedlab
