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
#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedlab/codec.h"
#include "fedlab/compressors.h"
#include "fedlab/linalg.h"
#include "fedlab/random.h"
#include "fedlab/sampling.h"

namespace {

fedlab::Vector gaussian(std::size_t d, std::uint64_t seed) {
  fedlab::RandomStream rng =
      fedlab::make_stream(seed, fedlab::Purpose::kDataGeneration);
  fedlab::Vector x(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  return x;
}

void BM_Compress(benchmark::State& state, const char* spec) {
  const auto desc = fedlab::parse_compressor(spec);
  const fedlab::Vector x = gaussian(static_cast<std::size_t>(state.range(0)), 1);
  fedlab::RandomStream rng =
      fedlab::make_stream(2, fedlab::Purpose::kWorkerCompression);
  for (auto _ : state) benchmark::DoNotOptimize(fedlab::compress(desc, x, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_Compress, natural, "natural")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK_CAPTURE(BM_Compress, rand_k, "rand_k(k=32)")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK_CAPTURE(BM_Compress, top_k, "top_k(k=32)")->Arg(1 << 10)->Arg(1 << 16);
BENCHMARK_CAPTURE(BM_Compress, natural_dither, "natural_dither(s=8)")
    ->Arg(1 << 10)
    ->Arg(1 << 16);

void BM_EncodeNatural(benchmark::State& state) {
  fedlab::RandomStream rng =
      fedlab::make_stream(3, fedlab::Purpose::kWorkerCompression);
  const fedlab::Vector x = fedlab::compress(
      fedlab::natural_compressor(),
      gaussian(static_cast<std::size_t>(state.range(0)), 3), rng);
  for (auto _ : state) benchmark::DoNotOptimize(fedlab::encode_nat(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeNatural)->Arg(1 << 10)->Arg(1 << 16);

std::vector<double> norms(std::size_t n) {
  const fedlab::Vector g = gaussian(n, 4);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = std::abs(g(static_cast<Eigen::Index>(i)));
  return u;
}

void BM_OptimalProbs(benchmark::State& state) {
  const auto u = norms(static_cast<std::size_t>(state.range(0)));
  const std::size_t m = u.size() / 10;
  for (auto _ : state) benchmark::DoNotOptimize(fedlab::optimal_probs(u, m));
}
BENCHMARK(BM_OptimalProbs)->Arg(100)->Arg(10000);

void BM_Aocs(benchmark::State& state) {
  const auto u = norms(static_cast<std::size_t>(state.range(0)));
  const std::size_t m = u.size() / 10;
  for (auto _ : state) benchmark::DoNotOptimize(fedlab::aocs(u, m, 4));
}
BENCHMARK(BM_Aocs)->Arg(100)->Arg(10000);

void BM_JacobiSvd(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const fedlab::Vector g = gaussian(static_cast<std::size_t>(n * n), 5);
  const fedlab::Matrix a = Eigen::Map<const fedlab::Matrix>(g.data(), n, n);
  for (auto _ : state) benchmark::DoNotOptimize(fedlab::jacobi_svd(a));
}
BENCHMARK(BM_JacobiSvd)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
