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

std::vector<std::size_t> expand(const std::vector<std::size_t>& values,
                                std::size_t n, const char* what) {
  if (values.size() == 1) return std::vector<std::size_t>(n, values[0]);
  require(values.size() == n, std::string("fedshuffle_gen: ") + what +
                                  " needs one entry or one per client");
  return values;
}

SamplingScheme scheme_of(const FiniteSumProblem& problem,
                         const std::optional<SamplingScheme>& sampling) {
  const std::size_t n = problem.clients();
  SamplingScheme scheme = sampling ? *sampling : SamplingScheme::full(n);
  require(scheme.n() == n, "sampling size does not match clients");
  require(scheme.proper(), "sampling must be proper");
  return scheme;
}

// Local step count of each client under the config.
std::vector<double> local_work(const FiniteSumProblem& problem,
                               const FedShuffleGenConfig& config) {
  const std::size_t n = problem.clients();
  std::vector<double> tau(n);
  if (!config.local_steps.empty()) {
    const auto steps = expand(config.local_steps, n, "local_steps");
    for (std::size_t i = 0; i < n; ++i) {
      require(steps[i] >= 1, "fedshuffle_gen: local steps must be >= 1");
      tau[i] = static_cast<double>(steps[i]);
    }
    return tau;
  }
  const auto epochs = expand(config.epochs, n, "epochs");
  for (std::size_t i = 0; i < n; ++i) {
    require(epochs[i] >= 1, "fedshuffle_gen: epochs must be >= 1");
    tau[i] = static_cast<double>(epochs[i] * problem.components(i));
  }
  return tau;
}

// E_S[1{i in S} / q^S_i].
std::vector<double> inverse_normalization(const FiniteSumProblem& problem,
                                          const SamplingScheme& scheme,
                                          Normalization normalization) {
  const std::size_t n = problem.clients();
  if (normalization == Normalization::kUnbiased)
    return std::vector<double>(n, 1.0);
  const auto w = problem.weights();
  std::vector<double> out(n, 0.0);
  for (const auto& s : enumerate_subsets(scheme)) {
    double total = 0.0;
    for (std::size_t j : s.clients) total += w[j];
    require(total > 0.0, "fedshuffle_gen: zero aggregation denominator");
    for (std::size_t i : s.clients) out[i] += s.probability / total;
  }
  return out;
}

}  // namespace

std::string_view preset_name(FedShufflePreset preset) {
  switch (preset) {
    case FedShufflePreset::kCustom: return "custom";
    case FedShufflePreset::kFedAvgRR: return "fedavg_rr";
    case FedShufflePreset::kFedNovaRR: return "fednova_rr";
    case FedShufflePreset::kFedShuffle: return "fedshuffle";
    case FedShufflePreset::kFedAvgMin: return "fedavg_min";
    case FedShufflePreset::kFedAvgMean: return "fedavg_mean";
  }
  return "custom";
}

std::optional<FedShufflePreset> preset_from_name(std::string_view name) {
  for (auto p : {FedShufflePreset::kCustom, FedShufflePreset::kFedAvgRR,
                 FedShufflePreset::kFedNovaRR, FedShufflePreset::kFedShuffle,
                 FedShufflePreset::kFedAvgMin, FedShufflePreset::kFedAvgMean})
    if (preset_name(p) == name) return p;
  return std::nullopt;
}

FedShuffleGenConfig resolve_preset(const FiniteSumProblem& problem,
                                   const FedShuffleGenConfig& config) {
  const std::size_t n = problem.clients();
  const auto w = problem.weights();
  FedShuffleGenConfig out = config;
  const std::vector<double> objective_weights(w.begin(), w.end());
  auto tau = local_work(problem, config);
  const double tau_max = *std::max_element(tau.begin(), tau.end());
  switch (config.preset) {
    case FedShufflePreset::kCustom:
      if (out.step_normalization.empty()) out.step_normalization = tau;
      if (out.aggregation_weights.empty())
        out.aggregation_weights = objective_weights;
      break;
    case FedShufflePreset::kFedAvgRR:
      out.step_normalization.assign(n, tau_max);
      out.aggregation_weights = objective_weights;
      out.normalization = Normalization::kSumOne;
      break;
    case FedShufflePreset::kFedNovaRR: {
      out.step_normalization.assign(n, tau_max);
      out.normalization = Normalization::kSumOne;
      const auto inv_q = inverse_normalization(
          problem, scheme_of(problem, config.sampling), Normalization::kSumOne);
      out.aggregation_weights.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        out.aggregation_weights[i] = w[i] / inv_q[i] * tau_max / tau[i];
      break;
    }
    case FedShufflePreset::kFedShuffle:
      out.step_normalization = tau;
      out.aggregation_weights = objective_weights;
      out.normalization = Normalization::kUnbiased;
      break;
    case FedShufflePreset::kFedAvgMin:
    case FedShufflePreset::kFedAvgMean: {
      double steps = *std::min_element(tau.begin(), tau.end());
      if (config.preset == FedShufflePreset::kFedAvgMean)
        steps = std::round(std::accumulate(tau.begin(), tau.end(), 0.0) /
                           static_cast<double>(n));
      out.local_steps.assign(n, static_cast<std::size_t>(steps));
      out.step_normalization.assign(n, steps);
      out.aggregation_weights = objective_weights;
      out.normalization = Normalization::kSumOne;
      break;
    }
  }
  out.preset = FedShufflePreset::kCustom;
  require(out.step_normalization.size() == n,
          "fedshuffle_gen: need one step normalization per client");
  require(out.aggregation_weights.size() == n,
          "fedshuffle_gen: need one aggregation weight per client");
  for (std::size_t i = 0; i < n; ++i) {
    require(out.step_normalization[i] > 0.0,
            "fedshuffle_gen: step normalization must be positive");
    require(out.aggregation_weights[i] >= 0.0,
            "fedshuffle_gen: aggregation weights must be nonnegative");
  }
  return out;
}

std::vector<double> implied_weights(const FiniteSumProblem& problem,
                                    const FedShuffleGenConfig& config) {
  const FedShuffleGenConfig c = resolve_preset(problem, config);
  const SamplingScheme scheme = scheme_of(problem, c.sampling);
  const auto tau = local_work(problem, c);
  const auto inv_q = inverse_normalization(problem, scheme, c.normalization);
  std::vector<double> out(problem.clients());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = c.aggregation_weights[i] * tau[i] * inv_q[i] /
             c.step_normalization[i];
    total += out[i];
  }
  require(total > 0.0, "fedshuffle_gen: implied weights vanish");
  for (double& v : out) v /= total;
  return out;
}

namespace {

// Runs `steps` reshuffled steps (whole epochs when steps is zero) of
// y <- y - step * direction(j, y) on client i.
template <typename Direction>
Vector local_pass(const FiniteSumProblem& problem, std::size_t client,
                  const Vector& start, std::size_t epochs, std::size_t steps,
                  double step, std::uint64_t seed, std::size_t round,
                  Direction direction) {
  Vector y = start;
  const std::size_t m = problem.components(client);
  const std::size_t total = steps > 0 ? steps : epochs * m;
  std::size_t done = 0;
  for (std::size_t e = 0; done < total; ++e) {
    RandomStream rng = make_stream(seed, Purpose::kPermutation, round, client, e);
    for (std::size_t j : permute_epoch(problem, client, rng)) {
      if (done == total) break;
      y -= step * direction(j, y);
      ++done;
    }
  }
  return y;
}

std::optional<std::size_t> pick_output(const std::vector<double>& weights,
                                       std::size_t rounds, std::uint64_t seed) {
  if (weights.empty()) return std::nullopt;
  require(weights.size() == rounds,
          "output weights need one entry per round");
  double total = 0.0;
  for (double v : weights) {
    require(std::isfinite(v) && v >= 0.0, "output weights must be nonnegative");
    total += v;
  }
  require(total > 0.0, "output weights must not all vanish");
  RandomStream rng = make_stream(seed, Purpose::kOutputSelection);
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    acc += weights[r];
    if (u < acc) return r;
  }
  return rounds - 1;
}

}  // namespace

Trajectory fedshuffle_gen(const FiniteSumProblem& problem,
                          const FedShuffleGenConfig& config,
                          const RunOptions& options) {
  internal::require_smooth(problem, "fedshuffle_gen");
  require(config.eta_l > 0.0 && config.eta_g > 0.0,
          "fedshuffle_gen: step sizes must be positive");
  const FedShuffleGenConfig c = resolve_preset(problem, config);
  const SamplingScheme scheme = scheme_of(problem, c.sampling);
  const std::size_t n = problem.clients();
  const std::size_t d = problem.dim();
  const auto w = problem.weights();
  const auto& p = scheme.inclusion();
  const auto epochs = expand(c.epochs, n, "epochs");
  const auto steps = c.local_steps.empty()
                         ? std::vector<std::size_t>(n, 0)
                         : expand(c.local_steps, n, "local_steps");
  const auto chosen = pick_output(c.output_weights, c.rounds, options.seed);

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  internal::start(traj, problem, x, options);
  for (std::size_t r = 0; r < c.rounds; ++r) {
    if (chosen && *chosen == r) traj.output_x = x;
    RandomStream sampler = make_stream(options.seed, Purpose::kClientSampling, r);
    ClientSet subset = draw(scheme, sampler);
    double cohort_weight = 0.0;
    for (std::size_t i : subset) cohort_weight += w[i];
    Vector aggregate = Vector::Zero(d);
    for (std::size_t i : subset) {
      const double step = c.eta_l / c.step_normalization[i];
      const Vector y = local_pass(
          problem, i, x, epochs[i], steps[i], step, options.seed, r,
          [&](std::size_t j, const Vector& v) { return problem.grad(i, j, v); });
      const double q = c.normalization == Normalization::kUnbiased
                           ? p[i]
                           : cohort_weight;
      require(q > 0.0, "fedshuffle_gen: zero aggregation denominator");
      aggregate += (c.aggregation_weights[i] / q) * (x - y);
    }
    x -= c.eta_g * aggregate;
    const std::uint64_t traffic = subset.size() * kFloatBits * d;
    internal::finish_round(traj, problem, r + 1, x, traffic, traffic,
                           std::move(subset), options);
  }
  traj.final_x = x;
  return traj;
}

Trajectory fedshuffle(const FiniteSumProblem& problem,
                      const FedShuffleConfig& config,
                      const RunOptions& options) {
  FedShuffleGenConfig gen;
  gen.preset = FedShufflePreset::kFedShuffle;
  gen.epochs = {config.epochs};
  gen.eta_l = config.eta_l;
  gen.eta_g = config.eta_g;
  gen.sampling = config.sampling;
  gen.rounds = config.rounds;
  gen.output_weights = config.output_weights;
  return fedshuffle_gen(problem, gen, options);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t pick_by_weight(std::span<const double> w, RandomStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return w.size() - 1;
}

}  // namespace

Trajectory fedshuffle_mvr(const FiniteSumProblem& problem,
                          const FedShuffleMvrConfig& config,
                          const RunOptions& options) {
  internal::require_smooth(problem, "fedshuffle_mvr");
  require(config.a >= 0.0 && config.a <= 1.0,
          "fedshuffle_mvr: momentum parameter a must lie in [0, 1]");
  require(config.eta_l > 0.0 && config.eta_g > 0.0,
          "fedshuffle_mvr: step sizes must be positive");
  require(config.epochs >= 1, "fedshuffle_mvr: epochs must be >= 1");
  const std::size_t d = problem.dim();
  const auto w = problem.weights();
  const double a = config.a;
  const std::size_t warmup =
      config.warmup_rounds ? *config.warmup_rounds : config.rounds;
  const std::uint64_t vector_bits = kFloatBits * d;

  Trajectory traj;
  Vector x = internal::initial_point(problem, options);
  Vector momentum = Vector::Zero(d);
  for (std::size_t t = 0; t < warmup; ++t) {
    RandomStream rng =
        make_stream(options.seed, Purpose::kClientSampling, t, 0, 1);
    momentum += problem.grad_client(pick_by_weight(w, rng), x);
  }
  if (warmup > 0) momentum /= static_cast<double>(warmup);
  RoundRecord first = make_record(problem, 0, x);
  first.bits_up = warmup * vector_bits;
  first.bits_down = warmup * vector_bits;
  internal::emit(traj, std::move(first), options);

  auto& momentum_error = traj.series["momentum_error"];
  Vector x_prev = x;
  for (std::size_t r = 0; r < config.rounds; ++r) {
    RandomStream sampler =
        make_stream(options.seed, Purpose::kClientSampling, r);
    const std::size_t i = pick_by_weight(w, sampler);
    const Vector g_now = problem.grad_client(i, x);
    if (r > 0) {
      const Vector g_prev = problem.grad_client(i, x_prev);
      momentum = a * g_now + (1.0 - a) * momentum + (1.0 - a) * (g_now - g_prev);
    }
    momentum_error.push_back((momentum - problem.grad_full(x)).squaredNorm());
    const double step =
        config.eta_l / static_cast<double>(problem.components(i));
    const Vector anchor = x;
    const Vector y = local_pass(
        problem, i, x, config.epochs, 0, step, options.seed, r,
        [&](std::size_t j, const Vector& v) {
          const Vector g = problem.grad(i, j, v);
          return Vector(a * g + (1.0 - a) * momentum +
                        (1.0 - a) * (g - problem.grad(i, j, anchor)));
        });
    x_prev = x;
    x -= config.eta_g * (x - y);
    internal::finish_round(traj, problem, r + 1, x, 3 * vector_bits,
                           3 * vector_bits, {i}, options);
  }
  traj.final_x = x;
  return traj;
}

}  // namespace fedlab
