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
#include "fedlab/algorithms.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "algorithm_internal.h"

namespace fedlab {
namespace internal {

std::size_t common_components(const FiniteSumProblem& problem,
                              const char* who) {
  const std::size_t m = problem.components(0);
  for (std::size_t i = 1; i < problem.clients(); ++i)
    require(problem.components(i) == m,
            std::string(who) + ": every client must hold the same number of "
                               "components");
  return m;
}

}  // namespace internal

using internal::kFloatBits;

std::uint64_t Trajectory::total_bits_up() const {
  std::uint64_t total = 0;
  for (const auto& r : records) total += r.bits_up;
  return total;
}

std::uint64_t Trajectory::total_bits_down() const {
  std::uint64_t total = 0;
  for (const auto& r : records) total += r.bits_down;
  return total;
}

StepSchedule StepSchedule::constant(double eta) {
  require(std::isfinite(eta) && eta > 0.0, "step size must be positive");
  return {Kind::kConstant, eta, 0.0};
}

StepSchedule StepSchedule::inverse_time(double scale, double offset) {
  require(std::isfinite(scale) && scale > 0.0,
          "step schedule scale must be positive");
  require(std::isfinite(offset) && offset > 0.0,
          "step schedule offset must be positive");
  return {Kind::kInverseTime, scale, offset};
}

double StepSchedule::at(std::size_t k) const {
  require(value > 0.0, "step schedule is not set");
  if (kind == Kind::kConstant) return value;
  return value / (offset + static_cast<double>(k));
}

GradientOracle GradientOracle::stochastic(std::size_t batch) {
  require(batch >= 1, "gradient oracle batch must be >= 1");
  return {Kind::kStochastic, batch};
}

RoundRecord make_record(const FiniteSumProblem& problem, std::size_t round,
                        const Vector& x) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  RoundRecord r;
  r.round = round;
  const auto f_star = problem.optimal_value();
  r.f_gap = f_star ? problem.objective(x) - *f_star : kNaN;
  r.grad_norm_sq = problem.grad_full(x).squaredNorm();
  r.dist_sq = problem.optimum() ? (x - *problem.optimum()).squaredNorm() : kNaN;
  return r;
}

Vector oracle_gradient(const FiniteSumProblem& problem,
                       const GradientOracle& oracle, std::size_t client,
                       const Vector& x, std::uint64_t seed, std::size_t round) {
  if (oracle.kind == GradientOracle::Kind::kExact)
    return problem.grad_client(client, x);
  RandomStream rng =
      make_stream(seed, Purpose::kStochasticGradient, round, client);
  return problem.stochastic_grad(client, x, rng, oracle.batch);
}

// ---------------------------------------------------------------------------

Trajectory cgd_biased(const FiniteSumProblem& problem, const CgdConfig& config,
                      const RunOptions& options) {
  internal::require_smooth(problem, "cgd_biased");
  validate(config.compressor);
  require(config.eta > 0.0, "cgd_biased: eta must be positive");
  const std::size_t d = problem.dim();
  const CompressorClass cls = declared_class(config.compressor, d);
  const double scale = cls.delta_scale;
  const std::uint64_t bits = bits_per_message(config.compressor, d);

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  auto& deltas = traj.series["delta"];
  for (std::size_t k = 0; k < config.steps; ++k) {
    const Vector g = problem.grad_full(x);
    RandomStream rng =
        make_stream(options.seed, Purpose::kWorkerCompression, k, 0);
    const Vector c = scale * compress(config.compressor, g, rng);
    const double g2 = g.squaredNorm();
    deltas.push_back(g2 > 0.0 ? 1.0 / (1.0 - (c - g).squaredNorm() / g2)
                              : 1.0);
    x -= config.eta * c;
    internal::finish_round(traj, problem, k + 1, x, bits, 0, {0}, options);
  }
  traj.final_x = x;
  return traj;
}

// ---------------------------------------------------------------------------

Trajectory dcsgd(const FiniteSumProblem& problem, const DcsgdConfig& config,
                 const RunOptions& options) {
  validate(config.worker);
  validate(config.master);
  if (!config.allow_biased) {
    require(is_unbiased(config.worker),
            "dcsgd: worker compressor " + to_string(config.worker) +
                " is biased; without error feedback distributed compressed "
                "SGD can diverge exponentially (see the three-client "
                "counterexample). Enable error feedback or set allow_biased");
    require(is_unbiased(config.master),
            "dcsgd: master compressor " + to_string(config.master) +
                " is biased; set allow_biased to run it without error "
                "feedback");
  }
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  const SamplingScheme scheme =
      config.sampling ? *config.sampling : SamplingScheme::full(n);
  require(scheme.n() == n, "dcsgd: sampling size does not match clients");
  require(scheme.proper(), "dcsgd: sampling must be proper");
  const auto& p = scheme.inclusion();
  const auto w = problem.weights();
  const bool master_identity = config.master.kind == CompressorKind::kIdentity;
  const std::uint64_t worker_bits = bits_per_message(config.worker, d);
  const std::uint64_t master_bits = bits_per_message(config.master, d);

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  for (std::size_t k = 0; k < config.rounds; ++k) {
    const double eta = config.step.at(k);
    RandomStream sampler =
        make_stream(options.seed, Purpose::kClientSampling, k);
    ClientSet subset = draw(scheme, sampler);
    Vector aggregate = Vector::Zero(d);
    for (std::size_t i : subset) {
      const Vector g =
          oracle_gradient(problem, config.oracle, i, x, options.seed, k);
      RandomStream rng =
          make_stream(options.seed, Purpose::kWorkerCompression, k, i);
      aggregate += (w[i] / p[i]) * compress(config.worker, g, rng);
    }
    if (!master_identity) {
      RandomStream rng =
          make_stream(options.seed, Purpose::kMasterCompression, k);
      aggregate = compress(config.master, aggregate, rng);
    }
    x = prox(problem.regularizer(), eta, x - eta * aggregate);
    const std::uint64_t up = subset.size() * worker_bits;
    internal::finish_round(traj, problem, k + 1, x, up, n * master_bits,
                           std::move(subset), options);
  }
  traj.final_x = x;
  return traj;
}

// ---------------------------------------------------------------------------

namespace {

// Ratio w_{k-1} / w_k of consecutive averaging weights.
double ef_weight_ratio(const EfConfig& config, double mu, double kappa,
                       std::size_t k) {
  switch (config.regime) {
    case EfRegime::kDecreasing:
      return (kappa + static_cast<double>(k) - 1.0) /
             (kappa + static_cast<double>(k));
    case EfRegime::kExponential:
      return 1.0 - mu * config.eta / 2.0;
    case EfRegime::kUniform:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

double ef_default_kappa(const FiniteSumProblem& problem,
                        const EfConfig& config) {
  const SmoothnessInfo s = problem.smoothness();
  require(s.mu > 0.0, "dcsgd_ef: the decreasing regime needs mu > 0");
  const auto cls = declared_class(config.compressor, problem.dim());
  require(cls.delta.has_value(),
          "dcsgd_ef: compressor has no contraction constant");
  return 56.0 * (2.0 * *cls.delta + config.noise_b) * s.L / s.mu;
}

double ef_step(const FiniteSumProblem& problem, const EfConfig& config,
               std::size_t k) {
  if (config.regime != EfRegime::kDecreasing) return config.eta;
  const double kappa =
      config.kappa ? *config.kappa : ef_default_kappa(problem, config);
  return 4.0 / (problem.smoothness().mu * (kappa + static_cast<double>(k)));
}

EfState ef_init(const FiniteSumProblem& problem, const Vector& x0) {
  EfState state;
  state.x = x0;
  state.error.assign(problem.clients(), Vector::Zero(problem.dim()));
  return state;
}

std::vector<Vector> ef_step_state(const FiniteSumProblem& problem,
                                  const EfConfig& config, EfState& state,
                                  std::uint64_t seed) {
  const std::size_t k = state.round;
  const double eta = ef_step(problem, config, k);
  const double scale =
      declared_class(config.compressor, problem.dim()).delta_scale;
  const auto w = problem.weights();
  std::vector<Vector> messages;
  messages.reserve(problem.clients());
  Vector update = Vector::Zero(problem.dim());
  for (std::size_t i = 0; i < problem.clients(); ++i) {
    const Vector g = oracle_gradient(problem, config.oracle, i, state.x, seed, k);
    const Vector target = state.error[i] + eta * g;
    RandomStream rng = make_stream(seed, Purpose::kWorkerCompression, k, i);
    Vector message = scale * compress(config.compressor, target, rng);
    state.error[i] = target - message;
    update += w[i] * message;
    messages.push_back(std::move(message));
  }
  state.x -= update;
  ++state.round;
  return messages;
}

Trajectory dcsgd_ef(const FiniteSumProblem& problem, const EfConfig& config,
                    const RunOptions& options) {
  internal::require_smooth(problem, "dcsgd_ef");
  validate(config.compressor);
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  const CompressorClass cls = declared_class(config.compressor, d);
  require(cls.delta.has_value(),
          "dcsgd_ef: compressor must have a contraction constant");
  double mu = problem.smoothness().mu;
  double kappa = 0.0;
  if (config.regime == EfRegime::kDecreasing) {
    kappa = config.kappa ? *config.kappa : ef_default_kappa(problem, config);
    require(kappa >= 1.0, "dcsgd_ef: kappa must be >= 1");
  } else {
    require(config.eta > 0.0, "dcsgd_ef: eta must be positive");
  }
  if (config.regime == EfRegime::kExponential) {
    require(mu > 0.0, "dcsgd_ef: the exponential regime needs mu > 0");
    require(mu * config.eta < 2.0, "dcsgd_ef: mu * eta must be below 2");
  }
  const std::uint64_t up = n * bits_per_message(config.compressor, d);
  const std::uint64_t down = n * kFloatBits * d;

  Trajectory traj;
  EfState state = ef_init(problem, internal::initial_point(problem, options));
  internal::start(traj, problem, state.x, options);
  // Weighted average kept through s_k = W_k / w_k to avoid overflow.
  Vector average = state.x;
  double s = 1.0;
  auto& error_norm = traj.series["error_norm_sq"];
  for (std::size_t k = 0; k < config.rounds; ++k) {
    ef_step_state(problem, config, state, options.seed);
    double total = 0.0;
    for (const auto& e : state.error) total += e.squaredNorm();
    error_norm.push_back(total);
    s = 1.0 + ef_weight_ratio(config, mu, kappa, k + 1) * s;
    average += (state.x - average) / s;
    internal::finish_round(traj, problem, k + 1, state.x, up, down,
                           internal::all_clients(n), options);
  }
  traj.final_x = state.x;
  traj.output_x = average;
  return traj;
}

// ---------------------------------------------------------------------------

std::vector<double> ocs_probabilities(const OcsConfig& config,
                                      std::span<const double> norms,
                                      std::size_t* rescalings) {
  const std::size_t n = norms.size();
  require(config.m >= 1 && config.m <= n,
          "client sampling: m must lie in [1, n]");
  if (rescalings) *rescalings = 0;
  const bool any = std::any_of(norms.begin(), norms.end(),
                               [](double u) { return u > 0.0; });
  switch (config.mode) {
    case OcsMode::kFull:
      return std::vector<double>(n, 1.0);
    case OcsMode::kUniform:
      return std::vector<double>(
          n, static_cast<double>(config.m) / static_cast<double>(n));
    case OcsMode::kOptimal:
      if (!any) return std::vector<double>(n, 0.0);
      return optimal_probs(norms, config.m);
    case OcsMode::kApproximate: {
      if (!any) return std::vector<double>(n, 0.0);
      AocsResult r = aocs_detailed(norms, static_cast<double>(config.m),
                                   config.j_max);
      if (rescalings) *rescalings = r.rescalings;
      return std::move(r.p);
    }
  }
  return {};
}

std::uint64_t ocs_overhead_floats(const OcsConfig& config, std::size_t n,
                                  std::size_t rescalings) {
  if (!config.count_overhead) return 0;
  switch (config.mode) {
    case OcsMode::kFull:
    case OcsMode::kUniform:
      return 0;
    case OcsMode::kOptimal:
      return n;
    case OcsMode::kApproximate:
      return n + 2 * n * rescalings;
  }
  return 0;
}

namespace {

struct SampledRound {
  ClientSet subset;
  std::vector<double> p;
  std::uint64_t overhead_floats = 0;
  double variance = 0.0;
};

SampledRound sample_by_norm(const OcsConfig& config,
                            const std::vector<Vector>& updates,
                            std::span<const double> w, std::uint64_t seed,
                            std::size_t round) {
  const std::size_t n = updates.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = w[i] * updates[i].norm();
  SampledRound out;
  std::size_t rescalings = 0;
  out.p = ocs_probabilities(config, norms, &rescalings);
  out.overhead_floats = ocs_overhead_floats(config, n, rescalings);
  RandomStream rng = make_stream(seed, Purpose::kClientSampling, round);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    if (u < out.p[i]) out.subset.push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (norms[i] > 0.0)
      out.variance += (1.0 - out.p[i]) / out.p[i] * norms[i] * norms[i];
  return out;
}

}  // namespace

Trajectory dsgd_ocs(const FiniteSumProblem& problem,
                    const DsgdOcsConfig& config, const RunOptions& options) {
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  require(config.sampling.m >= 1 && config.sampling.m <= n,
          "dsgd_ocs: m must lie in [1, n]");
  const auto w = problem.weights();

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  auto& variance = traj.series["variance"];
  for (std::size_t k = 0; k < config.rounds; ++k) {
    const double eta = config.step.at(k);
    std::vector<Vector> updates(n);
    for (std::size_t i = 0; i < n; ++i)
      updates[i] = oracle_gradient(problem, config.oracle, i, x, options.seed, k);
    SampledRound round = sample_by_norm(config.sampling, updates, w,
                                        options.seed, k);
    variance.push_back(round.variance);
    Vector aggregate = Vector::Zero(d);
    for (std::size_t i : round.subset)
      aggregate += (w[i] / round.p[i]) * updates[i];
    x = prox(problem.regularizer(), eta, x - eta * aggregate);
    const std::uint64_t up = round.subset.size() * kFloatBits * d +
                             round.overhead_floats * kFloatBits;
    internal::finish_round(traj, problem, k + 1, x, up, n * kFloatBits * d,
                           std::move(round.subset), options);
  }
  traj.final_x = x;
  return traj;
}

Trajectory fedavg_ocs(const FiniteSumProblem& problem,
                      const FedAvgOcsConfig& config,
                      const RunOptions& options) {
  internal::require_smooth(problem, "fedavg_ocs");
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  require(config.sampling.m >= 1 && config.sampling.m <= n,
          "fedavg_ocs: m must lie in [1, n]");
  require(config.local_steps >= 1, "fedavg_ocs: local_steps must be >= 1");
  require(config.eta_l > 0.0 && config.eta_g > 0.0,
          "fedavg_ocs: step sizes must be positive");
  const auto w = problem.weights();

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  auto& variance = traj.series["variance"];
  for (std::size_t k = 0; k < config.rounds; ++k) {
    std::vector<Vector> updates(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vector y = x;
      for (std::size_t r = 0; r < config.local_steps; ++r) {
        Vector g;
        if (config.oracle.kind == GradientOracle::Kind::kExact) {
          g = problem.grad_client(i, y);
        } else {
          RandomStream rng = make_stream(
              options.seed, Purpose::kStochasticGradient, k, i, r);
          g = problem.stochastic_grad(i, y, rng, config.oracle.batch);
        }
        y -= config.eta_l * g;
      }
      updates[i] = x - y;
    }
    SampledRound round = sample_by_norm(config.sampling, updates, w,
                                        options.seed, k);
    variance.push_back(round.variance);
    Vector aggregate = Vector::Zero(d);
    for (std::size_t i : round.subset)
      aggregate += (w[i] / round.p[i]) * updates[i];
    x -= config.eta_g * aggregate;
    const std::uint64_t up = round.subset.size() * kFloatBits * d +
                             round.overhead_floats * kFloatBits;
    internal::finish_round(traj, problem, k + 1, x, up, n * kFloatBits * d,
                           std::move(round.subset), options);
  }
  traj.final_x = x;
  return traj;
}

}  // namespace fedlab
