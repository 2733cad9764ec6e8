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
#ifndef FEDLAB_SRC_ALGORITHM_INTERNAL_H_
#define FEDLAB_SRC_ALGORITHM_INTERNAL_H_

#include <cstdint>
#include <string>

#include "fedlab/algorithms.h"

namespace fedlab::internal {

inline constexpr std::uint64_t kFloatBits = 32;

inline Vector initial_point(const FiniteSumProblem& problem,
                            const RunOptions& options) {
  if (!options.x0) return Vector::Zero(problem.dim());
  require(static_cast<std::size_t>(options.x0->size()) == problem.dim(),
          "x0 dimension does not match the problem");
  require_finite(*options.x0, "x0");
  return *options.x0;
}

inline void emit(Trajectory& traj, RoundRecord record,
                 const RunOptions& options) {
  if (options.sink) options.sink(record);
  traj.records.push_back(std::move(record));
}

inline void start(Trajectory& traj, const FiniteSumProblem& problem,
                  const Vector& x, const RunOptions& options) {
  emit(traj, make_record(problem, 0, x), options);
}

inline void finish_round(Trajectory& traj, const FiniteSumProblem& problem,
                         std::size_t round, const Vector& x,
                         std::uint64_t bits_up, std::uint64_t bits_down,
                         ClientSet participants, const RunOptions& options) {
  require(x.allFinite(), "iterate became non-finite at round " +
                             std::to_string(round));
  RoundRecord record = make_record(problem, round, x);
  record.bits_up = bits_up;
  record.bits_down = bits_down;
  record.participants = std::move(participants);
  emit(traj, std::move(record), options);
}

inline ClientSet all_clients(std::size_t n) {
  ClientSet out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

inline void require_smooth(const FiniteSumProblem& problem, const char* who) {
  require(problem.regularizer().kind == Regularizer::Kind::kNone,
          std::string(who) + ": problems with a regularizer are not supported");
}

inline void require_unbiased(const CompressorDescriptor& c, const char* who) {
  require(is_unbiased(c),
          std::string(who) + ": compressor " + to_string(c) +
              " is biased; an unbiased compressor is required");
}

// Component count shared by every client.
std::size_t common_components(const FiniteSumProblem& problem,
                              const char* who);

}  // namespace fedlab::internal

#endif  // FEDLAB_SRC_ALGORITHM_INTERNAL_H_
