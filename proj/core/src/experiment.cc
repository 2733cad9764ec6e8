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
#include "fedlab/experiment.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fedlab/metrics_sink.h"

namespace fedlab {
namespace {

StepSchedule schedule_of(const AlgorithmSpec& a) {
  if (a.schedule == "inverse_time")
    return StepSchedule::inverse_time(a.step, a.step_offset);
  return StepSchedule::constant(a.step);
}

GradientOracle oracle_of(const AlgorithmSpec& a) {
  return a.oracle == "stochastic" ? GradientOracle::stochastic(a.batch)
                                  : GradientOracle::exact();
}

OcsConfig ocs_of(const AlgorithmSpec& a) {
  OcsConfig c;
  if (a.mode == "uniform") c.mode = OcsMode::kUniform;
  else if (a.mode == "ocs") c.mode = OcsMode::kOptimal;
  else if (a.mode == "aocs") c.mode = OcsMode::kApproximate;
  else c.mode = OcsMode::kFull;
  c.m = a.m;
  c.j_max = a.j_max;
  c.count_overhead = a.count_overhead;
  return c;
}

EfRegime regime_of(const std::string& name) {
  if (name == "decreasing") return EfRegime::kDecreasing;
  if (name == "exponential") return EfRegime::kExponential;
  return EfRegime::kUniform;
}

}  // namespace

FiniteSumProblem build_problem(const ProblemSpec& spec) {
  const Regularizer reg =
      spec.l1 > 0.0 ? Regularizer::l1(spec.l1) : Regularizer::none();
  if (spec.kind == "quadratic_anchors")
    return quadratic_anchors(spec.counts, spec.dim);
  if (spec.kind == "counterexample") return counterexample_problem();
  if (spec.kind == "logistic") {
    SyntheticLogisticOptions o;
    o.clients = spec.clients;
    o.samples_per_client = spec.samples_per_client;
    o.dim = spec.dim;
    o.lambda2 = spec.lambda2;
    o.heterogeneity = spec.heterogeneity;
    o.seed = spec.data_seed;
    o.reg = reg;
    return synthetic_logistic(o);
  }
  if (spec.kind == "least_squares") {
    LeastSquaresOptions o;
    o.clients = spec.clients;
    o.samples_per_client = spec.samples_per_client;
    o.dim = spec.dim;
    o.condition = spec.condition;
    o.seed = spec.data_seed;
    return least_squares(o);
  }
  if (spec.kind == "csv_logistic") {
    const Dataset data = load_csv_dataset(spec.path);
    return logistic_regression(
        data.features, data.labels, spec.lambda2,
        Partition::equal(static_cast<std::size_t>(data.features.rows()),
                         spec.clients),
        reg);
  }
  throw InvalidArgument("unknown problem kind '" + spec.kind + "'");
}

SamplingScheme build_sampling(const SamplingSpec& spec, std::size_t n) {
  if (spec.kind == "uniform") return SamplingScheme::uniform(n, spec.m);
  if (spec.kind == "independent") {
    require(spec.p.size() == n,
            "sampling.p needs one probability per client");
    return SamplingScheme::independent(spec.p);
  }
  return SamplingScheme::full(n);
}

Trajectory run_single(const ExperimentConfig& config,
                      const FiniteSumProblem& problem, std::uint64_t seed,
                      RecordSink sink) {
  const AlgorithmSpec& a = config.algorithm;
  RunOptions options;
  options.seed = seed;
  options.sink = std::move(sink);
  if (!a.x0.empty())
    options.x0 = Eigen::Map<const Vector>(a.x0.data(),
                                          static_cast<Eigen::Index>(a.x0.size()));
  const SamplingScheme sampling =
      build_sampling(config.sampling, problem.clients());
  const std::string& k = a.kind;

  if (k == "cgd") {
    return cgd_biased(problem, {a.compressor, a.step, a.rounds}, options);
  }
  if (k == "dcsgd" && a.error_feedback) {
    EfConfig c;
    c.compressor = a.compressor;
    c.regime = regime_of(a.regime);
    c.eta = a.step;
    c.kappa = a.kappa;
    c.oracle = oracle_of(a);
    c.rounds = a.rounds;
    return dcsgd_ef(problem, c, options);
  }
  if (k == "dcsgd") {
    DcsgdConfig c;
    c.worker = a.compressor;
    c.master = a.master_compressor;
    c.sampling = sampling;
    c.step = schedule_of(a);
    c.oracle = oracle_of(a);
    c.rounds = a.rounds;
    c.allow_biased = a.allow_biased;
    return dcsgd(problem, c, options);
  }
  if (k == "diana") {
    DianaConfig c;
    c.compressor = a.compressor;
    c.alpha = a.alpha;
    c.gamma = a.gamma;
    c.oracle = oracle_of(a);
    c.rounds = a.rounds;
    return diana(problem, c, options);
  }
  if (k == "vr_diana") {
    VrDianaConfig c;
    c.compressor = a.compressor;
    c.variant = a.variant == "saga" ? VrVariant::kSaga : VrVariant::kLsvrg;
    c.alpha = a.alpha;
    c.gamma = a.gamma;
    c.rounds = a.rounds;
    return vr_diana(problem, c, options);
  }
  if (k == "svrg_diana") {
    SvrgDianaConfig c;
    c.compressor = a.compressor;
    c.epoch_length = a.epoch_length;
    c.anchor_weights = a.anchor_weights;
    c.alpha = a.alpha;
    c.gamma = a.gamma;
    c.rounds = a.rounds;
    return svrg_diana(problem, c, options);
  }
  if (k == "dsgd_ocs") {
    DsgdOcsConfig c;
    c.sampling = ocs_of(a);
    c.step = schedule_of(a);
    c.oracle = oracle_of(a);
    c.rounds = a.rounds;
    return dsgd_ocs(problem, c, options);
  }
  if (k == "fedavg_ocs") {
    FedAvgOcsConfig c;
    c.sampling = ocs_of(a);
    c.local_steps = a.local_steps;
    c.eta_l = a.eta_l;
    c.eta_g = a.eta_g;
    c.oracle = oracle_of(a);
    c.rounds = a.rounds;
    return fedavg_ocs(problem, c, options);
  }
  if (k == "fedshuffle") {
    FedShuffleConfig c;
    c.epochs = a.epochs;
    c.eta_l = a.eta_l;
    c.eta_g = a.eta_g;
    c.sampling = sampling;
    c.rounds = a.rounds;
    return fedshuffle(problem, c, options);
  }
  if (k == "fedshuffle_gen") {
    FedShuffleGenConfig c;
    c.preset = *preset_from_name(a.preset);
    c.epochs = {a.epochs};
    c.eta_l = a.eta_l;
    c.eta_g = a.eta_g;
    c.sampling = sampling;
    c.rounds = a.rounds;
    return fedshuffle_gen(problem, c, options);
  }
  if (k == "fedshuffle_mvr") {
    FedShuffleMvrConfig c;
    c.epochs = a.epochs;
    c.eta_l = a.eta_l;
    c.eta_g = a.eta_g;
    c.a = a.momentum;
    c.rounds = a.rounds;
    c.warmup_rounds = a.warmup_rounds;
    return fedshuffle_mvr(problem, c, options);
  }
  throw InvalidArgument("unknown algorithm '" + k + "'");
}

ExperimentOutput run_experiment(const ExperimentConfig& config,
                                std::optional<std::string> output_dir) {
  std::string dir = config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir = env;
  if (output_dir) dir = *output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + dir +
                             "': " + ec.message());

  const FiniteSumProblem problem = build_problem(config.problem);
  ExperimentOutput out;
  std::vector<double> f_gap, grad_norm, bits_up, bits_down;
  for (std::uint64_t seed : config.seeds) {
    const std::string path = (std::filesystem::path(dir) /
                              (config.name + "_seed" + std::to_string(seed) +
                               ".csv")).string();
    CsvMetricsSink sink(path);
    const Trajectory traj = run_single(
        config, problem, seed, [&sink](const RoundRecord& r) { sink.write(r); });
    sink.close();
    out.run_files.push_back(path);
    f_gap.push_back(traj.records.back().f_gap);
    grad_norm.push_back(traj.records.back().grad_norm_sq);
    bits_up.push_back(static_cast<double>(traj.total_bits_up()));
    bits_down.push_back(static_cast<double>(traj.total_bits_down()));
  }

  out.summary_file =
      (std::filesystem::path(dir) / (config.name + "_summary.csv")).string();
  std::ofstream summary(out.summary_file, std::ios::binary | std::ios::trunc);
  if (!summary)
    throw std::runtime_error("cannot open summary file '" + out.summary_file +
                             "'");
  summary << "metric,runs,median,q1,q3,iqr\n";
  auto row = [&](const char* name, const std::vector<double>& values) {
    const Quartiles q = quartiles(values);
    summary << name << ',' << values.size() << ',' << format_real(q.median)
            << ',' << format_real(q.q1) << ',' << format_real(q.q3) << ','
            << format_real(q.iqr) << '\n';
  };
  row("final_f_gap", f_gap);
  row("final_grad_norm_sq", grad_norm);
  row("total_bits_up", bits_up);
  row("total_bits_down", bits_down);
  summary.close();
  if (summary.fail())
    throw std::runtime_error("write failed for summary file '" +
                             out.summary_file + "'");
  return out;
}

}  // namespace fedlab
