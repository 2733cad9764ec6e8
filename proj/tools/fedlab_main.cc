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
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedlab/compressors.h"
#include "fedlab/config.h"
#include "fedlab/experiment.h"
#include "fedlab/linalg.h"
#include "fedlab/metrics_sink.h"
#include "fedlab/ordered_dropout.h"
#include "fedlab/random.h"
#include "fedlab/sampling.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::string fixed4(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", v);
  return buffer;
}

void print_row(const std::string& key, const std::vector<double>& values) {
  std::cout << key;
  for (double v : values) std::cout << ',' << fixed4(v);
  std::cout << '\n';
}

fedlab::Vector gaussian(std::size_t d, fedlab::RandomStream& rng) {
  fedlab::Vector x(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  return x;
}

int cmd_run(const std::string& path, const std::optional<std::string>& dir) {
  const fedlab::ExperimentConfig config = fedlab::load_config(path);
  const fedlab::ExperimentOutput out = fedlab::run_experiment(config, dir);
  for (const auto& f : out.run_files) std::cout << f << '\n';
  std::cout << out.summary_file << '\n';
  return kExitOk;
}

int cmd_variance(const std::string& spec, std::size_t dim, std::size_t trials,
                 std::size_t vectors, std::uint64_t seed) {
  const auto desc = fedlab::parse_compressor(spec);
  fedlab::require(dim >= 1 && trials >= 1 && vectors >= 1,
                  "variance: dim, trials and vectors must be >= 1");
  const auto cls = fedlab::declared_class(desc, dim);
  std::vector<double> estimates;
  for (std::size_t v = 0; v < vectors; ++v) {
    fedlab::RandomStream data =
        fedlab::make_stream(seed, fedlab::Purpose::kDataGeneration, v);
    const fedlab::Vector x = gaussian(dim, data);
    estimates.push_back(fedlab::empirical_variance(
        desc, x, trials,
        fedlab::make_stream(seed, fedlab::Purpose::kMonteCarlo, v)));
  }
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  const auto q = fedlab::quartiles(estimates);
  std::cout << "compressor,dim,vectors,trials,mean,median,max,declared_omega\n"
            << fedlab::to_string(desc) << ',' << dim << ',' << vectors << ','
            << trials << ',' << fedlab::format_real(mean) << ','
            << fedlab::format_real(q.median) << ','
            << fedlab::format_real(
                   *std::max_element(estimates.begin(), estimates.end()))
            << ','
            << (cls.omega ? fedlab::format_real(*cls.omega) : std::string("nan"))
            << '\n';
  return kExitOk;
}

int cmd_sampling(const std::vector<double>& norms, std::size_t m,
                 std::size_t j_max) {
  const std::vector<double> p = fedlab::optimal_probs(norms, m);
  const fedlab::AocsResult a =
      fedlab::aocs_detailed(norms, static_cast<double>(m), j_max);
  std::cout << "quantity,values\n";
  print_row("p", p);
  print_row("aocs_p", a.p);
  std::cout << "aocs_rescalings," << a.rescalings << '\n';
  const auto scheme = fedlab::SamplingScheme::independent(p, true);
  print_row("v", fedlab::eso_v(scheme));
  const fedlab::Matrix P = fedlab::probability_matrix(scheme);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(P.cols()));
    for (Eigen::Index j = 0; j < P.cols(); ++j) r[j] = P(i, j);
    print_row("P" + std::to_string(i), r);
  }
  if (m < norms.size())
    print_row("alpha", {fedlab::improvement_factor(norms, m)});
  return kExitOk;
}

int cmd_bits(const std::string& spec, std::size_t dim) {
  fedlab::require(dim >= 1, "bits: dim must be >= 1");
  std::cout << fedlab::bits_per_message(fedlab::parse_compressor(spec), dim)
            << '\n';
  return kExitOk;
}

int cmd_od_demo(std::size_t size, std::uint64_t seed, std::size_t steps,
                std::size_t restarts, double eta) {
  fedlab::require(size >= 1 && size <= fedlab::kMaxSvdDim,
                  "od-demo: size must lie in [1, 64]");
  fedlab::RandomStream data =
      fedlab::make_stream(seed, fedlab::Purpose::kDataGeneration);
  fedlab::Matrix a(static_cast<Eigen::Index>(size),
                   static_cast<Eigen::Index>(size));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = data.normal();
  fedlab::OdTrainOptions options;
  options.steps = steps;
  options.restarts = restarts;
  options.eta = eta;
  options.seed = seed;
  const auto result = fedlab::od_train(
      a, size, fedlab::DropoutDistribution::uniform(size), options);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const auto errors = fedlab::width_errors(result.model, a);
  const fedlab::Vector sigma = fedlab::jacobi_svd(a).sigma;
  std::cout << "width,distance_to_best_rank,best_rank_residual,singular_value\n";
  for (std::size_t b = 0; b < errors.size(); ++b) {
    const auto tail = sigma.tail(sigma.size() - static_cast<Eigen::Index>(b + 1));
    std::cout << b + 1 << ',' << fedlab::format_real(errors[b]) << ','
              << fedlab::format_real(tail.norm()) << ','
              << fedlab::format_real(sigma(static_cast<Eigen::Index>(b)))
              << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedlab: federated optimization laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> output_dir;
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("config", config_path, "Configuration file")->required();
  run->add_option("--output-dir", output_dir, "Override the output directory");

  std::string variance_spec;
  std::size_t variance_dim = 1000, variance_trials = 1, variance_vectors = 100;
  std::uint64_t variance_seed = 0;
  auto* variance =
      app.add_subcommand("variance", "Empirical normalized variance");
  variance->add_option("compressor", variance_spec, "Compressor spec")
      ->required();
  variance->add_option("--dim", variance_dim, "Dimension");
  variance->add_option("--trials", variance_trials, "Draws per vector");
  variance->add_option("--vectors", variance_vectors, "Gaussian vectors");
  variance->add_option("--seed", variance_seed, "Seed");

  std::vector<double> norms;
  std::size_t sampling_m = 1, j_max = 4;
  auto* sampling =
      app.add_subcommand("sampling", "Optimal client sampling probabilities");
  sampling->add_option("--norms", norms, "Update norms")
      ->required()
      ->delimiter(',');
  sampling->add_option("--m", sampling_m, "Expected participants")->required();
  sampling->add_option("--j-max", j_max, "Rescaling rounds for AOCS");

  std::string bits_spec;
  std::size_t bits_dim = 0;
  auto* bits = app.add_subcommand("bits", "Bits per message");
  bits->add_option("--compressor", bits_spec, "Compressor spec")->required();
  bits->add_option("--dim", bits_dim, "Dimension")->required();

  std::size_t od_size = 6, od_steps = 200000, od_restarts = 3;
  std::uint64_t od_seed = 0;
  double od_eta = 0.05;
  auto* od = app.add_subcommand("od-demo", "Ordered dropout recovers the SVD");
  od->add_option("--size", od_size, "Matrix size");
  od->add_option("--seed", od_seed, "Seed");
  od->add_option("--steps", od_steps, "Training steps");
  od->add_option("--restarts", od_restarts, "Restarts");
  od->add_option("--eta", od_eta, "Relative step size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*run) return cmd_run(config_path, output_dir);
    if (*variance)
      return cmd_variance(variance_spec, variance_dim, variance_trials,
                          variance_vectors, variance_seed);
    if (*sampling) return cmd_sampling(norms, sampling_m, j_max);
    if (*bits) return cmd_bits(bits_spec, bits_dim);
    if (*od) return cmd_od_demo(od_size, od_seed, od_steps, od_restarts, od_eta);
  } catch (const fedlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
