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
#ifndef FEDLAB_ALGORITHMS_H_
#define FEDLAB_ALGORITHMS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedlab/compressors.h"
#include "fedlab/problems.h"
#include "fedlab/random.h"
#include "fedlab/sampling.h"
#include "fedlab/types.h"

namespace fedlab {

// Metrics after `round` completed rounds; round 0 is the initial point.
// f_gap and dist_sq are NaN when the optimum is unknown.
struct RoundRecord {
  std::size_t round = 0;
  double f_gap = 0.0;
  double grad_norm_sq = 0.0;
  double dist_sq = 0.0;
  std::uint64_t bits_up = 0;
  std::uint64_t bits_down = 0;
  ClientSet participants;
};

using RecordSink = std::function<void(const RoundRecord&)>;

struct Trajectory {
  std::vector<RoundRecord> records;
  Vector final_x;
  // Weighted or randomly selected output iterate, when the method defines one.
  std::optional<Vector> output_x;
  // Per-round diagnostics such as "delta" or "lyapunov".
  std::map<std::string, std::vector<double>> series;

  std::uint64_t total_bits_up() const;
  std::uint64_t total_bits_down() const;
};

// eta_k = value for kConstant, value / (offset + k) for kInverseTime.
struct StepSchedule {
  enum class Kind { kConstant, kInverseTime };
  Kind kind = Kind::kConstant;
  double value = 0.0;
  double offset = 0.0;

  static StepSchedule constant(double eta);
  static StepSchedule inverse_time(double scale, double offset);
  double at(std::size_t k) const;
};

struct GradientOracle {
  enum class Kind { kExact, kStochastic };
  Kind kind = Kind::kExact;
  std::size_t batch = 1;

  static GradientOracle exact() { return {}; }
  static GradientOracle stochastic(std::size_t batch = 1);
};

struct RunOptions {
  std::uint64_t seed = 0;
  // Zero vector when unset.
  std::optional<Vector> x0;
  RecordSink sink;
};

// Metrics of x under the problem's known optimum.
RoundRecord make_record(const FiniteSumProblem& problem, std::size_t round,
                        const Vector& x);

// Client gradient at x under the oracle; stochastic draws use
// (kStochasticGradient, round, client).
Vector oracle_gradient(const FiniteSumProblem& problem,
                       const GradientOracle& oracle, std::size_t client,
                       const Vector& x, std::uint64_t seed, std::size_t round);

// ---------------------------------------------------------------------------
// Single-node compressed gradient descent with a contractive compressor:
// x <- x - eta * s * C(grad f(x)), s the declared delta_scale.
struct CgdConfig {
  CompressorDescriptor compressor;
  double eta = 0.0;
  std::size_t steps = 0;
};

// series["delta"][k] = 1 / (1 - ||sC(g) - g||^2 / ||g||^2) at step k.
Trajectory cgd_biased(const FiniteSumProblem& problem, const CgdConfig& config,
                      const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Distributed SGD with bidirectional compression and partial participation.
struct DcsgdConfig {
  CompressorDescriptor worker = identity_compressor();
  CompressorDescriptor master = identity_compressor();
  std::optional<SamplingScheme> sampling;  // full participation when unset
  StepSchedule step;
  GradientOracle oracle;
  std::size_t rounds = 0;
  // Permit biased compressors without error feedback. Such runs may diverge.
  bool allow_biased = false;
};

Trajectory dcsgd(const FiniteSumProblem& problem, const DcsgdConfig& config,
                 const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Distributed SGD with contractive compression and error feedback.
enum class EfRegime {
  // eta_k = 4 / (mu (kappa + k)), weights kappa + k.
  kDecreasing,
  // Constant eta, weights (1 - mu eta / 2)^{-(k+1)}.
  kExponential,
  // Constant eta, equal weights.
  kUniform,
};

struct EfConfig {
  CompressorDescriptor compressor = identity_compressor();
  EfRegime regime = EfRegime::kUniform;
  double eta = 0.0;  // constant regimes
  // Decreasing regime; 56 (2 delta + B) L / mu when unset.
  std::optional<double> kappa;
  // Second-moment constant of the gradient noise, used in the default kappa.
  double noise_b = 0.0;
  GradientOracle oracle;
  std::size_t rounds = 0;
};

double ef_default_kappa(const FiniteSumProblem& problem, const EfConfig& config);
double ef_step(const FiniteSumProblem& problem, const EfConfig& config,
               std::size_t k);

struct EfState {
  Vector x;
  std::vector<Vector> error;
  std::size_t round = 0;
};

EfState ef_init(const FiniteSumProblem& problem, const Vector& x0);
// One round. Returns the messages sent by the workers.
std::vector<Vector> ef_step_state(const FiniteSumProblem& problem,
                                  const EfConfig& config, EfState& state,
                                  std::uint64_t seed);

// output_x is the weighted average of x^0..x^K under the regime's weights.
Trajectory dcsgd_ef(const FiniteSumProblem& problem, const EfConfig& config,
                    const RunOptions& options = {});

// ---------------------------------------------------------------------------
// DIANA with per-worker shifts h_i learned from compressed differences.
struct DianaConfig {
  CompressorDescriptor compressor = identity_compressor();
  double alpha = 0.0;  // 1 / (omega + 1) when zero
  double gamma = 0.0;
  GradientOracle oracle;
  std::size_t rounds = 0;
  // Lyapunov shift weight; 4 omega / (alpha n) when unset.
  std::optional<double> lyapunov_c;
};

struct DianaState {
  Vector x;
  std::vector<Vector> h;  // per worker
  Vector h_mean;          // sum_i w_i h_i, maintained from messages only
  std::size_t round = 0;
};

double diana_alpha(const DianaConfig& config, std::size_t d);
DianaState diana_init(const FiniteSumProblem& problem, const Vector& x0);
void diana_step(const FiniteSumProblem& problem, const DianaConfig& config,
                DianaState& state, std::uint64_t seed);
// ||x - x*||^2 + c gamma^2 sum_i w_i ||h_i - grad f_i(x*)||^2.
double diana_lyapunov(const FiniteSumProblem& problem,
                      const DianaConfig& config, const DianaState& state);

// series: "lyapunov" when the optimum is known, "shift_mean_error".
Trajectory diana(const FiniteSumProblem& problem, const DianaConfig& config,
                 const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Variance-reduced DIANA. kLsvrg refreshes every reference point when a
// shared coin with probability 1/m lands; kSaga refreshes one table entry
// per worker and round.
enum class VrVariant { kLsvrg, kSaga };

struct VrDianaConfig {
  CompressorDescriptor compressor = identity_compressor();
  VrVariant variant = VrVariant::kLsvrg;
  double alpha = 0.0;  // 1 / (omega + 1) when zero
  double gamma = 0.0;  // theory step when zero
  std::size_t rounds = 0;
};

struct VrDianaState {
  Vector x;
  std::vector<Vector> h;
  Vector h_mean;
  // table[i][j] = grad f_ij(w_ij); mu[i] its mean over j.
  std::vector<std::vector<Vector>> table;
  std::vector<Vector> mu;
  std::size_t round = 0;
};

struct VrDianaConstants {
  double alpha = 0.0;
  double gamma = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rho = 0.0;
};

// Requires equal component counts m across workers.
VrDianaConstants vr_diana_constants(const FiniteSumProblem& problem,
                                    const VrDianaConfig& config);
VrDianaState vr_diana_init(const FiniteSumProblem& problem, const Vector& x0);
void vr_diana_step(const FiniteSumProblem& problem, const VrDianaConfig& config,
                   VrDianaState& state, std::uint64_t seed);
// psi = ||x - x*||^2 + b gamma^2 H + c gamma^2 D.
double vr_diana_lyapunov(const FiniteSumProblem& problem,
                         const VrDianaConfig& config,
                         const VrDianaState& state);

// series: "lyapunov", "table_distance" (D), "shift_distance" (H).
Trajectory vr_diana(const FiniteSumProblem& problem,
                    const VrDianaConfig& config, const RunOptions& options = {});

struct SvrgDianaConfig {
  CompressorDescriptor compressor = identity_compressor();
  std::size_t epoch_length = 1;
  // Averaging weights p_0..p_{l-1} of the anchor; uniform when empty.
  std::vector<double> anchor_weights;
  double alpha = 0.0;  // 1 / (omega + 1) when zero
  double gamma = 0.0;
  std::size_t rounds = 0;
};

Trajectory svrg_diana(const FiniteSumProblem& problem,
                      const SvrgDianaConfig& config,
                      const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Client sampling driven by the per-round update norms.
enum class OcsMode { kFull, kUniform, kOptimal, kApproximate };

struct OcsConfig {
  OcsMode mode = OcsMode::kFull;
  std::size_t m = 1;
  std::size_t j_max = 4;
  // Charge the norm and rescaling floats to the upstream total.
  bool count_overhead = true;
};

// Inclusion probabilities for the mode given norms u_i = w_i ||U_i||.
std::vector<double> ocs_probabilities(const OcsConfig& config,
                                      std::span<const double> norms,
                                      std::size_t* rescalings = nullptr);
// Extra upstream floats sent in one round.
std::uint64_t ocs_overhead_floats(const OcsConfig& config, std::size_t n,
                                  std::size_t rescalings);

struct DsgdOcsConfig {
  OcsConfig sampling;
  StepSchedule step;
  GradientOracle oracle;
  std::size_t rounds = 0;
};

// series["variance"]: exact sampling variance of the round's aggregate.
Trajectory dsgd_ocs(const FiniteSumProblem& problem,
                    const DsgdOcsConfig& config,
                    const RunOptions& options = {});

struct FedAvgOcsConfig {
  OcsConfig sampling;
  std::size_t local_steps = 1;
  double eta_l = 0.0;
  double eta_g = 1.0;
  GradientOracle oracle;
  std::size_t rounds = 0;
};

Trajectory fedavg_ocs(const FiniteSumProblem& problem,
                      const FedAvgOcsConfig& config,
                      const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Local reshuffled epochs with normalized steps and reweighted aggregation:
// y <- y - (eta_l / b_i) grad f_{i pi(j)}(y) over E_i epochs,
// x <- x - eta_g sum_{i in S} (wt_i / q^S_i) (x - y_i).
enum class Normalization {
  kUnbiased,  // q^S_i = p_i
  kSumOne,    // q^S_i = sum_{j in S} w_j
};

enum class FedShufflePreset {
  kCustom,
  kFedAvgRR,
  kFedNovaRR,
  kFedShuffle,
  kFedAvgMin,
  kFedAvgMean,
};

struct FedShuffleGenConfig {
  FedShufflePreset preset = FedShufflePreset::kCustom;
  // Per-client local epochs; a single entry applies to every client.
  std::vector<std::size_t> epochs = {1};
  // Fixed local step counts replacing whole epochs. Empty means epochs.
  std::vector<std::size_t> local_steps;
  std::vector<double> step_normalization;   // b_i
  std::vector<double> aggregation_weights;  // wt_i
  Normalization normalization = Normalization::kUnbiased;
  double eta_l = 0.0;
  double eta_g = 1.0;
  std::optional<SamplingScheme> sampling;
  std::size_t rounds = 0;
  // Output x^r with probability proportional to output_weights[r]; the last
  // iterate when empty.
  std::vector<double> output_weights;
};

// Fills b, wt, normalization and step counts for a preset.
FedShuffleGenConfig resolve_preset(const FiniteSumProblem& problem,
                                   const FedShuffleGenConfig& config);

// Objective weights w_hat of the reweighted problem minimized by the method.
std::vector<double> implied_weights(const FiniteSumProblem& problem,
                                    const FedShuffleGenConfig& config);

Trajectory fedshuffle_gen(const FiniteSumProblem& problem,
                          const FedShuffleGenConfig& config,
                          const RunOptions& options = {});

struct FedShuffleConfig {
  std::size_t epochs = 1;
  double eta_l = 0.0;
  double eta_g = 1.0;
  std::optional<SamplingScheme> sampling;
  std::size_t rounds = 0;
  std::vector<double> output_weights;
};

Trajectory fedshuffle(const FiniteSumProblem& problem,
                      const FedShuffleConfig& config,
                      const RunOptions& options = {});

// FedShuffle with server momentum and a gradient-difference correction. One
// client per round, chosen with probability w_i.
struct FedShuffleMvrConfig {
  std::size_t epochs = 1;
  double eta_l = 0.0;
  double eta_g = 1.0;
  double a = 1.0;
  std::size_t rounds = 0;
  // Rounds spent accumulating the initial momentum; `rounds` when unset.
  std::optional<std::size_t> warmup_rounds;
};

// series["momentum_error"]: ||m^r - grad f(x^r)||^2.
Trajectory fedshuffle_mvr(const FiniteSumProblem& problem,
                          const FedShuffleMvrConfig& config,
                          const RunOptions& options = {});

std::string_view preset_name(FedShufflePreset preset);
std::optional<FedShufflePreset> preset_from_name(std::string_view name);

}  // namespace fedlab

#endif  // FEDLAB_ALGORITHMS_H_
