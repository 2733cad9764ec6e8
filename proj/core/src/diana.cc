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
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "algorithm_internal.h"
#include "fedlab/algorithms.h"

namespace fedlab {
namespace {

using internal::kFloatBits;

double declared_omega(const CompressorDescriptor& c, std::size_t d,
                      const char* who) {
  validate(c);
  internal::require_unbiased(c, who);
  return *declared_class(c, d).omega;
}

double resolve_alpha(double alpha, double omega, const char* who) {
  const double limit = 1.0 / (omega + 1.0);
  if (alpha == 0.0) return limit;
  require(alpha > 0.0 && alpha <= limit * (1.0 + 1e-12),
          std::string(who) + ": alpha must lie in (0, 1/(omega+1)]");
  return alpha;
}

void add_lyapunov_point(Trajectory& traj, const char* key, double value) {
  traj.series[key].push_back(value);
}

}  // namespace

// ---------------------------------------------------------------------------

double diana_alpha(const DianaConfig& config, std::size_t d) {
  return resolve_alpha(config.alpha, declared_omega(config.compressor, d, "diana"),
                       "diana");
}

DianaState diana_init(const FiniteSumProblem& problem, const Vector& x0) {
  DianaState state;
  state.x = x0;
  state.h.assign(problem.clients(), Vector::Zero(problem.dim()));
  state.h_mean = Vector::Zero(problem.dim());
  return state;
}

void diana_step(const FiniteSumProblem& problem, const DianaConfig& config,
                DianaState& state, std::uint64_t seed) {
  const std::size_t k = state.round;
  const double alpha = diana_alpha(config, problem.dim());
  require(config.gamma > 0.0, "diana: gamma must be positive");
  const auto w = problem.weights();
  Vector q = Vector::Zero(problem.dim());
  for (std::size_t i = 0; i < problem.clients(); ++i) {
    const Vector g = oracle_gradient(problem, config.oracle, i, state.x, seed, k);
    RandomStream rng = make_stream(seed, Purpose::kWorkerCompression, k, i);
    const Vector delta = compress(config.compressor, g - state.h[i], rng);
    state.h[i] += alpha * delta;
    q += w[i] * delta;
  }
  const Vector estimate = state.h_mean + q;
  state.x = prox(problem.regularizer(), config.gamma,
                 state.x - config.gamma * estimate);
  state.h_mean += alpha * q;
  ++state.round;
}

double diana_lyapunov(const FiniteSumProblem& problem,
                      const DianaConfig& config, const DianaState& state) {
  require(problem.optimum().has_value(), "diana: optimum unknown");
  const std::size_t d = problem.dim();
  const double omega = declared_omega(config.compressor, d, "diana");
  const double alpha = resolve_alpha(config.alpha, omega, "diana");
  const double c =
      config.lyapunov_c
          ? *config.lyapunov_c
          : 4.0 * omega / (alpha * static_cast<double>(problem.clients()));
  const Vector& xs = *problem.optimum();
  const auto w = problem.weights();
  double shifts = 0.0;
  for (std::size_t i = 0; i < problem.clients(); ++i)
    shifts += w[i] * (state.h[i] - problem.grad_client(i, xs)).squaredNorm();
  return (state.x - xs).squaredNorm() +
         c * config.gamma * config.gamma * shifts;
}

Trajectory diana(const FiniteSumProblem& problem, const DianaConfig& config,
                 const RunOptions& options) {
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  diana_alpha(config, d);
  require(config.gamma > 0.0, "diana: gamma must be positive");
  const std::uint64_t up = n * bits_per_message(config.compressor, d);
  const std::uint64_t down = n * kFloatBits * d;
  const bool lyapunov = problem.optimum().has_value();
  const auto w = problem.weights();

  Trajectory traj;
  DianaState state = diana_init(problem, internal::initial_point(problem, options));
  internal::start(traj, problem, state.x, options);
  if (lyapunov)
    add_lyapunov_point(traj, "lyapunov", diana_lyapunov(problem, config, state));
  auto& mean_error = traj.series["shift_mean_error"];
  mean_error.push_back(0.0);
  for (std::size_t k = 0; k < config.rounds; ++k) {
    diana_step(problem, config, state, options.seed);
    Vector mean = Vector::Zero(d);
    for (std::size_t i = 0; i < n; ++i) mean += w[i] * state.h[i];
    mean_error.push_back((mean - state.h_mean).norm());
    if (lyapunov)
      add_lyapunov_point(traj, "lyapunov",
                         diana_lyapunov(problem, config, state));
    internal::finish_round(traj, problem, k + 1, state.x, up, down,
                           internal::all_clients(n), options);
  }
  traj.final_x = state.x;
  return traj;
}

// ---------------------------------------------------------------------------

VrDianaConstants vr_diana_constants(const FiniteSumProblem& problem,
                                    const VrDianaConfig& config) {
  const std::size_t d = problem.dim();
  const double n = static_cast<double>(problem.clients());
  const double m = static_cast<double>(
      internal::common_components(problem, "vr_diana"));
  const double omega = declared_omega(config.compressor, d, "vr_diana");
  const SmoothnessInfo s = problem.smoothness();
  VrDianaConstants out;
  out.alpha = resolve_alpha(config.alpha, omega, "vr_diana");
  const double factor = 1.0 + 36.0 * (omega + 1.0) / n;
  out.gamma = config.gamma > 0.0 ? config.gamma : 1.0 / (s.L * factor);
  out.b = 4.0 * (omega + 1.0) / (out.alpha * n * n);
  out.c = 16.0 * (omega + 1.0) / (out.alpha * n * n);
  out.rho = std::min({s.mu / (s.L * factor), out.alpha / 2.0, 3.0 / (8.0 * m)});
  return out;
}

VrDianaState vr_diana_init(const FiniteSumProblem& problem, const Vector& x0) {
  const std::size_t n = problem.clients();
  VrDianaState state;
  state.x = x0;
  state.h.assign(n, Vector::Zero(problem.dim()));
  state.h_mean = Vector::Zero(problem.dim());
  state.table.resize(n);
  state.mu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = problem.components(i);
    Vector total = Vector::Zero(problem.dim());
    for (std::size_t j = 0; j < m; ++j) {
      state.table[i].push_back(problem.grad(i, j, x0));
      total += state.table[i].back();
    }
    state.mu[i] = total / static_cast<double>(m);
  }
  return state;
}

void vr_diana_step(const FiniteSumProblem& problem, const VrDianaConfig& config,
                   VrDianaState& state, std::uint64_t seed) {
  const std::size_t k = state.round;
  const std::size_t n = problem.clients();
  const std::size_t m = internal::common_components(problem, "vr_diana");
  const VrDianaConstants cst = vr_diana_constants(problem, config);
  const auto w = problem.weights();

  bool refresh = false;
  if (config.variant == VrVariant::kLsvrg) {
    RandomStream coin = make_stream(seed, Purpose::kControlCoin, k);
    refresh = coin.uniform() < 1.0 / static_cast<double>(m);
  }
  Vector q = Vector::Zero(problem.dim());
  std::vector<std::size_t> picked(n);
  std::vector<Vector> fresh(n);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream pick = make_stream(seed, Purpose::kStochasticGradient, k, i);
    const std::size_t j = pick.below(m);
    picked[i] = j;
    fresh[i] = problem.grad(i, j, state.x);
    const Vector g = fresh[i] - state.table[i][j] + state.mu[i];
    RandomStream rng = make_stream(seed, Purpose::kWorkerCompression, k, i);
    const Vector delta = compress(config.compressor, g - state.h[i], rng);
    state.h[i] += cst.alpha * delta;
    q += w[i] * delta;
  }
  const Vector estimate = state.h_mean + q;
  const Vector x_next = prox(problem.regularizer(), cst.gamma,
                             state.x - cst.gamma * estimate);
  state.h_mean += cst.alpha * q;

  if (config.variant == VrVariant::kSaga) {
    for (std::size_t i = 0; i < n; ++i) {
      Vector& slot = state.table[i][picked[i]];
      state.mu[i] += (fresh[i] - slot) / static_cast<double>(m);
      slot = fresh[i];
    }
  } else if (refresh) {
    for (std::size_t i = 0; i < n; ++i) {
      Vector total = Vector::Zero(problem.dim());
      for (std::size_t j = 0; j < m; ++j) {
        state.table[i][j] = problem.grad(i, j, state.x);
        total += state.table[i][j];
      }
      state.mu[i] = total / static_cast<double>(m);
    }
  }
  state.x = x_next;
  ++state.round;
}

namespace {

struct VrDistances {
  double h = 0.0;
  double d = 0.0;
};

VrDistances vr_distances(const FiniteSumProblem& problem,
                         const VrDianaState& state) {
  const Vector& xs = *problem.optimum();
  VrDistances out;
  for (std::size_t i = 0; i < problem.clients(); ++i) {
    out.h += (state.h[i] - problem.grad_client(i, xs)).squaredNorm();
    for (std::size_t j = 0; j < state.table[i].size(); ++j)
      out.d += (state.table[i][j] - problem.grad(i, j, xs)).squaredNorm();
  }
  return out;
}

}  // namespace

double vr_diana_lyapunov(const FiniteSumProblem& problem,
                         const VrDianaConfig& config,
                         const VrDianaState& state) {
  require(problem.optimum().has_value(), "vr_diana: optimum unknown");
  const VrDianaConstants cst = vr_diana_constants(problem, config);
  const VrDistances dist = vr_distances(problem, state);
  const double g2 = cst.gamma * cst.gamma;
  return (state.x - *problem.optimum()).squaredNorm() + cst.b * g2 * dist.h +
         cst.c * g2 * dist.d;
}

Trajectory vr_diana(const FiniteSumProblem& problem,
                    const VrDianaConfig& config, const RunOptions& options) {
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  const VrDianaConstants cst = vr_diana_constants(problem, config);
  const std::uint64_t up = n * bits_per_message(config.compressor, d);
  const std::uint64_t down = n * kFloatBits * d;
  const bool lyapunov = problem.optimum().has_value();

  Trajectory traj;
  VrDianaState state =
      vr_diana_init(problem, internal::initial_point(problem, options));
  internal::start(traj, problem, state.x, options);
  auto track = [&] {
    if (!lyapunov) return;
    const VrDistances dist = vr_distances(problem, state);
    const double g2 = cst.gamma * cst.gamma;
    traj.series["shift_distance"].push_back(dist.h);
    traj.series["table_distance"].push_back(dist.d);
    traj.series["lyapunov"].push_back(
        (state.x - *problem.optimum()).squaredNorm() + cst.b * g2 * dist.h +
        cst.c * g2 * dist.d);
  };
  track();
  for (std::size_t k = 0; k < config.rounds; ++k) {
    vr_diana_step(problem, config, state, options.seed);
    track();
    internal::finish_round(traj, problem, k + 1, state.x, up, down,
                           internal::all_clients(n), options);
  }
  traj.final_x = state.x;
  return traj;
}

// ---------------------------------------------------------------------------

Trajectory svrg_diana(const FiniteSumProblem& problem,
                      const SvrgDianaConfig& config,
                      const RunOptions& options) {
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  const std::size_t l = config.epoch_length;
  require(l >= 1, "svrg_diana: epoch length must be >= 1");
  require(config.rounds % l == 0,
          "svrg_diana: rounds must be a multiple of the epoch length");
  std::vector<double> p = config.anchor_weights;
  if (p.empty()) p.assign(l, 1.0 / static_cast<double>(l));
  require(p.size() == l, "svrg_diana: need one anchor weight per epoch step");
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  require(std::abs(sum - 1.0) <= 1e-12,
          "svrg_diana: anchor weights must sum to 1");
  const double omega = declared_omega(config.compressor, d, "svrg_diana");
  const double alpha = resolve_alpha(config.alpha, omega, "svrg_diana");
  require(config.gamma > 0.0, "svrg_diana: gamma must be positive");
  const auto w = problem.weights();
  const std::uint64_t up = n * bits_per_message(config.compressor, d);
  const std::uint64_t down = n * kFloatBits * d;

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  std::vector<Vector> h(n, Vector::Zero(d));
  Vector anchor = x;
  std::vector<Vector> mu(n);
  for (std::size_t i = 0; i < n; ++i) mu[i] = problem.grad_client(i, anchor);
  std::vector<Vector> window;
  window.reserve(l);
  for (std::size_t k = 0; k < config.rounds; ++k) {
    if (k > 0 && k % l == 0) {
      anchor = Vector::Zero(d);
      for (std::size_t r = 0; r < l; ++r) anchor += p[r] * window[r];
      for (std::size_t i = 0; i < n; ++i) mu[i] = problem.grad_client(i, anchor);
      window.clear();
    }
    window.push_back(x);
    Vector estimate = Vector::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
      RandomStream pick =
          make_stream(options.seed, Purpose::kStochasticGradient, k, i);
      const std::size_t j = pick.below(problem.components(i));
      const Vector g =
          problem.grad(i, j, x) - problem.grad(i, j, anchor) + mu[i];
      RandomStream rng =
          make_stream(options.seed, Purpose::kWorkerCompression, k, i);
      const Vector delta = compress(config.compressor, g - h[i], rng);
      estimate += w[i] * (delta + h[i]);
      h[i] += alpha * delta;
    }
    x = prox(problem.regularizer(), config.gamma, x - config.gamma * estimate);
    internal::finish_round(traj, problem, k + 1, x, up, down,
                           internal::all_clients(n), options);
  }
  traj.final_x = x;
  return traj;
}

}  // namespace fedlab
