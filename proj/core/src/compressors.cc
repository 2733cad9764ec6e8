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

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "fedlab/sampling.h"

namespace fedlab {
namespace {

constexpr std::uint64_t kInnerStage = 1;
constexpr std::uint64_t kOuterStage = 2;
constexpr std::uint64_t kNormStage = 3;

constexpr struct {
  CompressorKind kind;
  std::string_view name;
} kKindNames[] = {
    {CompressorKind::kIdentity, "identity"},
    {CompressorKind::kNatural, "natural"},
    {CompressorKind::kStandardDither, "standard_dither"},
    {CompressorKind::kNaturalDither, "natural_dither"},
    {CompressorKind::kGeneralDither, "general_dither"},
    {CompressorKind::kExpDither, "exp_dither"},
    {CompressorKind::kRandK, "rand_k"},
    {CompressorKind::kTopK, "top_k"},
    {CompressorKind::kBiasedRandSparse, "biased_rand_sparse"},
    {CompressorKind::kAdaptiveSparse, "adaptive_sparse"},
    {CompressorKind::kNuRand1, "nu_rand1"},
    {CompressorKind::kWangni, "wangni"},
    {CompressorKind::kUnbiasedRounding, "unbiased_rounding"},
    {CompressorKind::kBiasedRounding, "biased_rounding"},
    {CompressorKind::kCompose, "compose"},
    {CompressorKind::kInduced, "induced"},
};

bool is_sparsifier(CompressorKind kind) {
  switch (kind) {
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
    case CompressorKind::kBiasedRandSparse:
    case CompressorKind::kAdaptiveSparse:
    case CompressorKind::kNuRand1:
    case CompressorKind::kWangni:
      return true;
    default:
      return false;
  }
}

// Sparsifiers whose output keeps a subset of coordinates unchanged.
bool is_restriction(CompressorKind kind) {
  return kind == CompressorKind::kTopK ||
         kind == CompressorKind::kAdaptiveSparse ||
         kind == CompressorKind::kBiasedRandSparse;
}

void check_levels(const std::vector<double>& levels, const char* what) {
  require(!levels.empty(), std::string(what) + ": empty level list");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(std::isfinite(levels[i]) && levels[i] > 0.0,
            std::string(what) + ": levels must be positive and finite");
    if (i > 0)
      require(levels[i] > levels[i - 1],
              std::string(what) + ": levels must be strictly increasing");
  }
}

void check_p_norm(double p) {
  require(p >= 1.0 && !std::isnan(p), "dithering: p-norm must be >= 1");
}

double p_norm_of(const Vector& x, double p) {
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  if (p == 2.0) return x.norm();
  if (p == 1.0) return x.lpNorm<1>();
  const double scale = x.cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (double v : x) acc += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

// d^{1/r} with r = min(p, 2).
double dim_factor(std::size_t d, double p) {
  const double r = std::min(p, 2.0);
  return std::pow(static_cast<double>(d), 1.0 / r);
}

// sup over consecutive positive levels of (hi - lo)^2 / (4 lo hi).
double ratio_variance(const std::vector<double>& levels) {
  double theta = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double lo = levels[i - 1];
    const double hi = levels[i];
    theta = std::max(theta, (hi - lo) * (hi - lo) / (4.0 * lo * hi));
  }
  return theta;
}

double with_compressed_norm(double omega, bool compress_norm) {
  return compress_norm ? 9.0 / 8.0 * (omega + 1.0) - 1.0 : omega;
}

void require_dimension(const CompressorDescriptor& desc, std::size_t d) {
  require(d >= 1, "compressor: dimension must be >= 1");
  const auto& p = desc.params;
  switch (desc.kind) {
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
    case CompressorKind::kWangni:
      require(p.k <= d, std::string(kind_name(desc.kind)) +
                            ": k=" + std::to_string(p.k) +
                            " exceeds dimension " + std::to_string(d));
      break;
    case CompressorKind::kBiasedRandSparse:
      require(p.probabilities.size() == d,
              "biased_rand_sparse: probability vector length " +
                  std::to_string(p.probabilities.size()) +
                  " does not match dimension " + std::to_string(d));
      break;
    case CompressorKind::kCompose:
    case CompressorKind::kInduced:
      for (const auto& child : desc.children) require_dimension(child, d);
      break;
    default:
      break;
  }
}

std::size_t sparse_support(const CompressorDescriptor& desc) {
  switch (desc.kind) {
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
    case CompressorKind::kWangni:
      return desc.params.k;
    case CompressorKind::kAdaptiveSparse:
    case CompressorKind::kNuRand1:
      return 1;
    case CompressorKind::kBiasedRandSparse: {
      const double total =
          std::accumulate(desc.params.probabilities.begin(),
                          desc.params.probabilities.end(), 0.0);
      return static_cast<std::size_t>(std::ceil(total - 1e-12));
    }
    default:
      return 0;
  }
}

// Number of exponent codes for base-b rounding over the binary32 range.
std::uint64_t rounding_level_count(const CompressorParams& p) {
  if (!p.levels.empty()) return p.levels.size();
  return static_cast<std::uint64_t>(std::ceil(254.0 / std::log2(p.base) - 1e-12));
}

double pow_int(double base, long k) {
  if (base == 2.0) return std::ldexp(1.0, static_cast<int>(k));
  return std::pow(base, static_cast<double>(k));
}

// Bracketing levels lo <= a < hi of a positive magnitude.
std::pair<double, double> bracket(const CompressorParams& p, double a) {
  if (!p.levels.empty()) {
    const auto& lv = p.levels;
    if (a < lv.front() || a > lv.back())
      throw InvalidArgument("rounding: magnitude " + std::to_string(a) +
                            " outside the level range");
    auto it = std::upper_bound(lv.begin(), lv.end(), a);
    if (it == lv.end()) return {lv.back(), lv.back()};
    return {*(it - 1), *it};
  }
  long k = static_cast<long>(std::floor(std::log(a) / std::log(p.base)));
  double lo = pow_int(p.base, k);
  while (lo > a) lo = pow_int(p.base, --k);
  double hi = pow_int(p.base, k + 1);
  while (hi <= a) {
    ++k;
    lo = hi;
    hi = pow_int(p.base, k + 1);
  }
  if (std::isinf(hi))
    throw std::overflow_error("rounding: upper level overflows");
  return {lo, hi};
}

Vector compress_rounding(const CompressorDescriptor& desc, const Vector& x,
                         RandomStream& rng, bool unbiased) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = unbiased ? rng.uniform() : 0.0;
    const double a = std::abs(x[i]);
    if (a == 0.0) {
      out[i] = x[i];
      continue;
    }
    auto [lo, hi] = bracket(desc.params, a);
    double value;
    if (a == lo || lo == hi) {
      value = a;
    } else if (unbiased) {
      value = u < (a - lo) / (hi - lo) ? hi : lo;
    } else {
      value = (hi - a) < (a - lo) ? hi : lo;
    }
    out[i] = std::copysign(value, x[i]);
  }
  return out;
}

Vector compress_rand_k(std::size_t k, const Vector& x, RandomStream& rng) {
  const auto d = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> index(d);
  std::iota(index.begin(), index.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(d - i);
    std::swap(index[i], index[j]);
  }
  Vector out = Vector::Zero(x.size());
  const double scale = static_cast<double>(d) / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i)
    out[index[i]] = x[index[i]] * scale;
  return out;
}

Vector compress_top_k(std::size_t k, const Vector& x) {
  const auto d = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> index(d);
  std::iota(index.begin(), index.end(), 0);
  std::partial_sort(index.begin(), index.begin() + k, index.end(),
                    [&x](std::size_t a, std::size_t b) {
                      const double xa = std::abs(x[a]);
                      const double xb = std::abs(x[b]);
                      return xa > xb || (xa == xb && a < b);
                    });
  Vector out = Vector::Zero(x.size());
  for (std::size_t i = 0; i < k; ++i) out[index[i]] = x[index[i]];
  return out;
}

// Index i chosen with probability |x_i| / ||x||_1.
std::size_t pick_proportional(const Vector& x, double l1, RandomStream& rng) {
  const double target = rng.uniform() * l1;
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    last_nonzero = static_cast<std::size_t>(i);
    acc += std::abs(x[i]);
    if (acc > target) return last_nonzero;
  }
  return last_nonzero;
}

Vector compress_wangni(std::size_t k, const Vector& x, RandomStream& rng) {
  std::vector<double> u(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = std::abs(x[i]);
  const AocsResult fixed =
      aocs_detailed(u, static_cast<double>(k), u.size() + 1);
  Vector out = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double draw = rng.uniform();
    const double p = fixed.p[i];
    if (p > 0.0 && draw < p) out[i] = x[i] / p;
  }
  return out;
}

}  // namespace

std::string_view kind_name(CompressorKind kind) {
  for (const auto& entry : kKindNames)
    if (entry.kind == kind) return entry.name;
  return "unknown";
}

std::optional<CompressorKind> kind_from_name(std::string_view name) {
  for (const auto& entry : kKindNames)
    if (entry.name == name) return entry.kind;
  return std::nullopt;
}

unsigned ceil_log2(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("ceil_log2: argument must be >= 1");
  unsigned bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

void validate(const CompressorDescriptor& desc) {
  const auto& p = desc.params;
  const std::string name(kind_name(desc.kind));
  switch (desc.kind) {
    case CompressorKind::kIdentity:
    case CompressorKind::kNatural:
    case CompressorKind::kAdaptiveSparse:
    case CompressorKind::kNuRand1:
      break;
    case CompressorKind::kStandardDither:
      require(p.s >= 1, name + ": s must be >= 1");
      check_p_norm(p.p_norm);
      break;
    case CompressorKind::kNaturalDither:
      require(p.s >= 1 && p.s <= 1074, name + ": s must be in [1, 1074]");
      check_p_norm(p.p_norm);
      break;
    case CompressorKind::kExpDither:
      require(p.base > 1.0 && std::isfinite(p.base), name + ": base must be > 1");
      require(p.s >= 1, name + ": s must be >= 1");
      require(std::pow(p.base, 1.0 - static_cast<double>(p.s)) > 0.0,
              name + ": smallest level underflows");
      check_p_norm(p.p_norm);
      break;
    case CompressorKind::kGeneralDither:
      check_levels(p.levels, name.c_str());
      require(p.levels.back() == 1.0, name + ": largest level must be 1");
      check_p_norm(p.p_norm);
      break;
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
    case CompressorKind::kWangni:
      require(p.k >= 1, name + ": k must be >= 1");
      break;
    case CompressorKind::kBiasedRandSparse:
      require(!p.probabilities.empty(), name + ": empty probability vector");
      for (double q : p.probabilities)
        require(q > 0.0 && q <= 1.0,
                name + ": probabilities must lie in (0, 1]");
      break;
    case CompressorKind::kUnbiasedRounding:
    case CompressorKind::kBiasedRounding:
      if (p.levels.empty()) {
        require(p.base > 1.0 && std::isfinite(p.base),
                name + ": base must be > 1");
      } else {
        check_levels(p.levels, name.c_str());
      }
      break;
    case CompressorKind::kCompose: {
      require(desc.children.size() == 2, "compose: needs exactly two children");
      for (const auto& child : desc.children) validate(child);
      const auto& outer = desc.children[0];
      const auto& inner = desc.children[1];
      require(is_unbiased(outer),
              "compose: outer compressor " + to_string(outer) +
                  " is biased; composition is defined for unbiased stages");
      require(is_unbiased(inner) || is_restriction(inner.kind),
              "compose: inner compressor " + to_string(inner) +
                  " is biased and not a coordinate restriction");
      break;
    }
    case CompressorKind::kInduced: {
      require(desc.children.size() == 2, "induced: needs exactly two children");
      for (const auto& child : desc.children) validate(child);
      const auto& biased = desc.children[0];
      const auto& unbiased = desc.children[1];
      require(unbiased.kind == CompressorKind::kIdentity ||
                  is_unbiased(unbiased),
              "induced: second compressor must be unbiased");
      require(biased.kind == CompressorKind::kIdentity ||
                  biased.kind == CompressorKind::kTopK ||
                  biased.kind == CompressorKind::kAdaptiveSparse ||
                  biased.kind == CompressorKind::kBiasedRandSparse ||
                  biased.kind == CompressorKind::kBiasedRounding,
              "induced: first compressor must be contractive at unit scale");
      break;
    }
  }
}

bool is_unbiased(const CompressorDescriptor& desc) {
  switch (desc.kind) {
    case CompressorKind::kTopK:
    case CompressorKind::kBiasedRandSparse:
    case CompressorKind::kAdaptiveSparse:
    case CompressorKind::kBiasedRounding:
      return false;
    case CompressorKind::kCompose:
      return desc.children.size() == 2 && is_unbiased(desc.children[0]) &&
             is_unbiased(desc.children[1]);
    default:
      return true;
  }
}

CompressorDescriptor identity_compressor() { return {}; }

CompressorDescriptor natural_compressor() {
  return {CompressorKind::kNatural, {}, {}};
}

CompressorDescriptor standard_dither(std::size_t s, double p_norm,
                                     bool compress_norm) {
  CompressorDescriptor desc{CompressorKind::kStandardDither, {}, {}};
  desc.params.s = s;
  desc.params.p_norm = p_norm;
  desc.params.compress_norm = compress_norm;
  validate(desc);
  return desc;
}

CompressorDescriptor natural_dither(std::size_t s, double p_norm,
                                    bool compress_norm) {
  CompressorDescriptor desc{CompressorKind::kNaturalDither, {}, {}};
  desc.params.s = s;
  desc.params.p_norm = p_norm;
  desc.params.compress_norm = compress_norm;
  validate(desc);
  return desc;
}

CompressorDescriptor exp_dither(double base, std::size_t s, double p_norm,
                                bool compress_norm) {
  CompressorDescriptor desc{CompressorKind::kExpDither, {}, {}};
  desc.params.base = base;
  desc.params.s = s;
  desc.params.p_norm = p_norm;
  desc.params.compress_norm = compress_norm;
  validate(desc);
  return desc;
}

CompressorDescriptor general_dither(std::vector<double> levels, double p_norm,
                                    bool compress_norm) {
  CompressorDescriptor desc{CompressorKind::kGeneralDither, {}, {}};
  desc.params.levels = std::move(levels);
  desc.params.p_norm = p_norm;
  desc.params.compress_norm = compress_norm;
  validate(desc);
  return desc;
}

CompressorDescriptor rand_k(std::size_t k) {
  CompressorDescriptor desc{CompressorKind::kRandK, {}, {}};
  desc.params.k = k;
  validate(desc);
  return desc;
}

CompressorDescriptor top_k(std::size_t k) {
  CompressorDescriptor desc{CompressorKind::kTopK, {}, {}};
  desc.params.k = k;
  validate(desc);
  return desc;
}

CompressorDescriptor biased_rand_sparse(std::vector<double> probabilities) {
  CompressorDescriptor desc{CompressorKind::kBiasedRandSparse, {}, {}};
  desc.params.probabilities = std::move(probabilities);
  validate(desc);
  return desc;
}

CompressorDescriptor adaptive_sparse() {
  return {CompressorKind::kAdaptiveSparse, {}, {}};
}

CompressorDescriptor nu_rand1() { return {CompressorKind::kNuRand1, {}, {}}; }

CompressorDescriptor wangni(std::size_t k) {
  CompressorDescriptor desc{CompressorKind::kWangni, {}, {}};
  desc.params.k = k;
  validate(desc);
  return desc;
}

CompressorDescriptor unbiased_rounding(double base) {
  CompressorDescriptor desc{CompressorKind::kUnbiasedRounding, {}, {}};
  desc.params.base = base;
  validate(desc);
  return desc;
}

CompressorDescriptor unbiased_rounding(std::vector<double> levels) {
  CompressorDescriptor desc{CompressorKind::kUnbiasedRounding, {}, {}};
  desc.params.levels = std::move(levels);
  validate(desc);
  return desc;
}

CompressorDescriptor biased_rounding(double base) {
  CompressorDescriptor desc{CompressorKind::kBiasedRounding, {}, {}};
  desc.params.base = base;
  validate(desc);
  return desc;
}

CompressorDescriptor biased_rounding(std::vector<double> levels) {
  CompressorDescriptor desc{CompressorKind::kBiasedRounding, {}, {}};
  desc.params.levels = std::move(levels);
  validate(desc);
  return desc;
}

CompressorDescriptor compose(CompressorDescriptor outer,
                             CompressorDescriptor inner) {
  CompressorDescriptor desc{CompressorKind::kCompose, {}, {}};
  desc.children.push_back(std::move(outer));
  desc.children.push_back(std::move(inner));
  validate(desc);
  return desc;
}

CompressorDescriptor induce(CompressorDescriptor biased,
                            CompressorDescriptor unbiased) {
  CompressorDescriptor desc{CompressorKind::kInduced, {}, {}};
  desc.children.push_back(std::move(biased));
  desc.children.push_back(std::move(unbiased));
  validate(desc);
  return desc;
}

std::vector<double> dither_levels(const CompressorDescriptor& desc) {
  const auto& p = desc.params;
  std::vector<double> levels;
  switch (desc.kind) {
    case CompressorKind::kStandardDither:
      for (std::size_t j = 1; j <= p.s; ++j)
        levels.push_back(static_cast<double>(j) / static_cast<double>(p.s));
      break;
    case CompressorKind::kNaturalDither:
      for (std::size_t j = p.s; j-- > 0;)
        levels.push_back(std::ldexp(1.0, -static_cast<int>(j)));
      break;
    case CompressorKind::kExpDither:
      for (std::size_t j = p.s; j-- > 0;)
        levels.push_back(j == 0 ? 1.0 : std::pow(p.base, -static_cast<double>(j)));
      break;
    case CompressorKind::kGeneralDither:
      levels = p.levels;
      break;
    default:
      throw InvalidArgument("dither_levels: " + std::string(kind_name(desc.kind)) +
                            " is not a dithering compressor");
  }
  return levels;
}

CompressorClass declared_class(const CompressorDescriptor& desc,
                               std::size_t d) {
  validate(desc);
  require_dimension(desc, d);
  const auto& p = desc.params;
  const double dd = static_cast<double>(d);
  CompressorClass c;
  switch (desc.kind) {
    case CompressorKind::kIdentity:
      c.omega = 0.0;
      c.alpha = c.beta = c.gamma = c.delta = 1.0;
      break;
    case CompressorKind::kNatural:
      c.omega = 1.0 / 8.0;
      break;
    case CompressorKind::kStandardDither: {
      const double t = dim_factor(d, p.p_norm) / static_cast<double>(p.s);
      c.omega = with_compressed_norm(t * std::min(1.0, t), p.compress_norm);
      break;
    }
    case CompressorKind::kNaturalDither:
    case CompressorKind::kExpDither:
    case CompressorKind::kGeneralDither: {
      const auto levels = dither_levels(desc);
      const double t = dim_factor(d, p.p_norm) * levels.front();
      c.omega = with_compressed_norm(ratio_variance(levels) + t * std::min(1.0, t),
                                     p.compress_norm);
      break;
    }
    case CompressorKind::kRandK:
    case CompressorKind::kWangni:
      c.omega = dd / static_cast<double>(p.k) - 1.0;
      break;
    case CompressorKind::kTopK:
      c.alpha = c.gamma = static_cast<double>(p.k) / dd;
      c.beta = 1.0;
      c.delta = dd / static_cast<double>(p.k);
      break;
    case CompressorKind::kBiasedRandSparse: {
      const double q =
          *std::min_element(p.probabilities.begin(), p.probabilities.end());
      c.alpha = c.gamma = q;
      c.beta = 1.0;
      c.delta = 1.0 / q;
      break;
    }
    case CompressorKind::kAdaptiveSparse:
      c.alpha = c.gamma = 1.0 / dd;
      c.beta = 1.0;
      c.delta = dd;
      break;
    case CompressorKind::kNuRand1:
      c.omega = dd - 1.0;
      break;
    case CompressorKind::kUnbiasedRounding:
      if (p.levels.empty()) {
        c.omega = (p.base - 1.0) * (p.base - 1.0) / (4.0 * p.base);
      } else {
        c.omega = ratio_variance(p.levels);
      }
      break;
    case CompressorKind::kBiasedRounding: {
      if (p.levels.empty()) {
        const double b = p.base;
        c.gamma = 2.0 / (b + 1.0);
        c.alpha = *c.gamma * *c.gamma;
        c.beta = 2.0 * b / (b + 1.0);
        c.delta = (b + 1.0) * (b + 1.0) / (4.0 * b);
      } else {
        double beta = 1.0, gamma = 1.0, delta = 1.0;
        for (std::size_t i = 1; i < p.levels.size(); ++i) {
          const double lo = p.levels[i - 1];
          const double hi = p.levels[i];
          beta = std::max(beta, 2.0 * hi / (lo + hi));
          gamma = std::min(gamma, 2.0 * lo / (lo + hi));
          delta = std::max(delta, (lo + hi) * (lo + hi) / (4.0 * lo * hi));
        }
        c.alpha = gamma * gamma;
        c.beta = beta;
        c.gamma = gamma;
        c.delta = delta;
      }
      break;
    }
    case CompressorKind::kCompose: {
      const CompressorClass outer = declared_class(desc.children[0], d);
      const CompressorClass inner = declared_class(desc.children[1], d);
      const double w1 = *outer.omega;
      if (inner.unbiased()) {
        const double w2 = *inner.omega;
        c.omega = w1 * w2 + w1 + w2;
      } else {
        const double zeta = w1 + 1.0;
        c.alpha = inner.alpha;
        c.gamma = inner.gamma;
        c.beta = zeta;
        c.delta = *inner.delta * zeta;
        c.delta_scale = 1.0 / zeta;
      }
      break;
    }
    case CompressorKind::kInduced: {
      const CompressorClass biased = declared_class(desc.children[0], d);
      const CompressorClass unbiased = declared_class(desc.children[1], d);
      const double d1 = *biased.delta;
      const double d2 = *unbiased.omega + 1.0;
      c.omega = d2 * (1.0 - 1.0 / d1) + 1.0 / d1 - 1.0;
      break;
    }
  }
  return c;
}

double c_nat_scalar(double t, RandomStream& rng) {
  if (!std::isfinite(t)) throw InvalidArgument("c_nat: non-finite input");
  const double u = rng.uniform();
  const double a = std::abs(t);
  if (a < FLT_MIN) return 0.0;
  int e = 0;
  const double mantissa = std::frexp(a, &e);
  if (mantissa == 0.5) return t;
  const double lower = std::ldexp(1.0, e - 1);
  const double upper = std::ldexp(1.0, e);
  if (std::isinf(upper)) throw std::overflow_error("c_nat: rounding overflows");
  const double p_down = (upper - a) / lower;
  return std::copysign(u < p_down ? lower : upper, t);
}

DitheredVector dither_encode(const CompressorDescriptor& desc, const Vector& x,
                             RandomStream& rng) {
  validate(desc);
  const auto levels = dither_levels(desc);
  const double norm = p_norm_of(x, desc.params.p_norm);
  DitheredVector message;
  const auto d = static_cast<std::size_t>(x.size());
  message.sign.assign(d, 0);
  message.level.assign(d, 0);
  if (norm == 0.0) return message;
  if (desc.params.compress_norm) {
    RandomStream norm_stream = rng.split(rng.next_u64()).split(kNormStage);
    message.norm = c_nat_scalar(norm, norm_stream);
  } else {
    message.norm = norm;
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double u = rng.uniform();
    if (x[i] == 0.0) continue;
    message.sign[i] = x[i] < 0.0 ? -1 : 1;
    const double y = std::min(std::abs(x[i]) / norm, 1.0);
    const auto it = std::lower_bound(levels.begin(), levels.end(), y);
    const auto upper = static_cast<std::uint32_t>(it - levels.begin()) + 1;
    if (*it == y) {
      message.level[i] = upper;
      continue;
    }
    const double lo = upper == 1 ? 0.0 : levels[upper - 2];
    const double hi = *it;
    message.level[i] = u < (y - lo) / (hi - lo) ? upper : upper - 1;
  }
  return message;
}

Vector dither_decode(const CompressorDescriptor& desc,
                     const DitheredVector& message) {
  const auto levels = dither_levels(desc);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(message.sign.size()));
  for (std::size_t i = 0; i < message.sign.size(); ++i) {
    if (message.level[i] == 0) continue;
    out[i] = message.sign[i] * message.norm * levels[message.level[i] - 1];
  }
  return out;
}

Vector compress(const CompressorDescriptor& desc, const Vector& x,
                RandomStream& rng) {
  require_finite(x, "compress");
  const auto d = static_cast<std::size_t>(x.size());
  validate(desc);
  require_dimension(desc, d);
  if (x.isZero(0.0)) return x;
  const auto& p = desc.params;
  switch (desc.kind) {
    case CompressorKind::kIdentity:
      return x;
    case CompressorKind::kNatural: {
      Vector out(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        out[i] = c_nat_scalar(x[i], rng);
      return out;
    }
    case CompressorKind::kStandardDither:
    case CompressorKind::kNaturalDither:
    case CompressorKind::kGeneralDither:
    case CompressorKind::kExpDither:
      return dither_decode(desc, dither_encode(desc, x, rng));
    case CompressorKind::kRandK:
      return compress_rand_k(p.k, x, rng);
    case CompressorKind::kTopK:
      return compress_top_k(p.k, x);
    case CompressorKind::kBiasedRandSparse: {
      Vector out = Vector::Zero(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (rng.uniform() < p.probabilities[i]) out[i] = x[i];
      return out;
    }
    case CompressorKind::kAdaptiveSparse: {
      const double l1 = x.lpNorm<1>();
      Vector out = Vector::Zero(x.size());
      const std::size_t i = pick_proportional(x, l1, rng);
      out[i] = x[i];
      return out;
    }
    case CompressorKind::kNuRand1: {
      const double l1 = x.lpNorm<1>();
      Vector out = Vector::Zero(x.size());
      const std::size_t i = pick_proportional(x, l1, rng);
      out[i] = std::copysign(l1, x[i]);
      return out;
    }
    case CompressorKind::kWangni:
      return compress_wangni(p.k, x, rng);
    case CompressorKind::kUnbiasedRounding:
      return compress_rounding(desc, x, rng, /*unbiased=*/true);
    case CompressorKind::kBiasedRounding:
      return compress_rounding(desc, x, rng, /*unbiased=*/false);
    case CompressorKind::kCompose: {
      const RandomStream call = rng.split(rng.next_u64());
      RandomStream inner_stream = call.split(kInnerStage);
      RandomStream outer_stream = call.split(kOuterStage);
      const Vector inner = compress(desc.children[1], x, inner_stream);
      return compress(desc.children[0], inner, outer_stream);
    }
    case CompressorKind::kInduced: {
      const RandomStream call = rng.split(rng.next_u64());
      RandomStream first_stream = call.split(kInnerStage);
      RandomStream second_stream = call.split(kOuterStage);
      const Vector first = compress(desc.children[0], x, first_stream);
      const Vector residual = x - first;
      return first + compress(desc.children[1], residual, second_stream);
    }
  }
  throw InvalidArgument("compress: unknown compressor kind");
}

double empirical_variance(const CompressorDescriptor& desc, const Vector& x,
                          std::size_t trials, const RandomStream& rng) {
  require_finite(x, "empirical_variance");
  require(!x.isZero(0.0), "empirical_variance: zero vector");
  require(trials >= 1, "empirical_variance: trials must be >= 1");
  const double norm_sq = x.squaredNorm();
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream stream = rng.split(t);
    total += (compress(desc, x, stream) - x).squaredNorm() / norm_sq;
  }
  return total / static_cast<double>(trials);
}

double empirical_second_moment(const CompressorDescriptor& desc,
                               const Vector& x, std::size_t trials,
                               const RandomStream& rng) {
  require_finite(x, "empirical_second_moment");
  require(!x.isZero(0.0), "empirical_second_moment: zero vector");
  require(trials >= 1, "empirical_second_moment: trials must be >= 1");
  const double norm_sq = x.squaredNorm();
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream stream = rng.split(t);
    total += compress(desc, x, stream).squaredNorm() / norm_sq;
  }
  return total / static_cast<double>(trials);
}

std::uint64_t bits_per_message(const CompressorDescriptor& desc,
                               std::size_t d) {
  validate(desc);
  require_dimension(desc, d);
  const auto dd = static_cast<std::uint64_t>(d);
  const auto& p = desc.params;
  const std::uint64_t norm_bits = p.compress_norm ? 8 : 31;
  switch (desc.kind) {
    case CompressorKind::kIdentity:
      return 32 * dd;
    case CompressorKind::kNatural:
      return 9 * dd;
    case CompressorKind::kStandardDither:
      return norm_bits + dd * (3 + ceil_log2(p.s));
    case CompressorKind::kNaturalDither:
    case CompressorKind::kExpDither:
      return norm_bits + dd * (2 + ceil_log2(p.s));
    case CompressorKind::kGeneralDither:
      return norm_bits + dd * (2 + ceil_log2(p.levels.size()));
    case CompressorKind::kRandK:
    case CompressorKind::kTopK:
    case CompressorKind::kBiasedRandSparse:
    case CompressorKind::kAdaptiveSparse:
    case CompressorKind::kNuRand1:
    case CompressorKind::kWangni:
      return sparse_support(desc) * (33 + ceil_log2(dd));
    case CompressorKind::kUnbiasedRounding:
    case CompressorKind::kBiasedRounding:
      return dd * (1 + ceil_log2(rounding_level_count(p) + 1));
    case CompressorKind::kCompose: {
      const auto& outer = desc.children[0];
      const auto& inner = desc.children[1];
      const CompressorDescriptor* sparse = nullptr;
      const CompressorDescriptor* values = nullptr;
      if (is_sparsifier(inner.kind) && !is_sparsifier(outer.kind)) {
        sparse = &inner;
        values = &outer;
      } else if (is_sparsifier(outer.kind) && !is_sparsifier(inner.kind)) {
        sparse = &outer;
        values = &inner;
      }
      if (sparse == nullptr) return bits_per_message(outer, d);
      const std::uint64_t q = sparse_support(*sparse);
      if (q == 0) return 0;
      return q * (1 + ceil_log2(dd)) + bits_per_message(*values, q);
    }
    case CompressorKind::kInduced:
      return bits_per_message(desc.children[0], d) +
             bits_per_message(desc.children[1], d);
  }
  throw InvalidArgument("bits_per_message: unknown compressor kind");
}

}  // namespace fedlab
