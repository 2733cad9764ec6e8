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
#ifndef FEDLAB_RANDOM_H_
#define FEDLAB_RANDOM_H_

#include <array>
#include <cstdint>

namespace fedlab {

// Purpose tags partition the random streams of a run. Adding a tag never
// changes the draws of an existing one.
enum class Purpose : std::uint32_t {
  kGeneric = 0,
  kWorkerCompression = 1,
  kMasterCompression = 2,
  kClientSampling = 3,
  kStochasticGradient = 4,
  kPermutation = 5,
  kControlCoin = 6,
  kDataGeneration = 7,
  kInitialization = 8,
  kOutputSelection = 9,
  kDropoutWidth = 10,
  kMonteCarlo = 11,
};

struct StreamLabel {
  Purpose purpose = Purpose::kGeneric;
  std::uint64_t round = 0;
  std::uint64_t client = 0;
  std::uint64_t sub = 0;

  friend bool operator==(const StreamLabel&, const StreamLabel&) = default;
};

// Counter-based, splittable pseudo-random stream.
//
// The 256-bit xoshiro256** state is derived by SplitMix64 hashing of
// (seed, purpose, round, client, sub). Two streams with the same seed and
// label produce the same sequence no matter when or where they are created.
// All variates are produced from raw 64-bit output by fixed formulas, so the
// sequence does not depend on the standard library implementation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : RandomStream(seed, {}) {}
  RandomStream(std::uint64_t seed, StreamLabel label);

  std::uint64_t seed() const { return seed_; }
  const StreamLabel& label() const { return label_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  // Child stream keyed on this stream's identity and `tag`. Independent of
  // how many draws have been taken from the parent.
  RandomStream split(std::uint64_t tag) const;

 private:
  RandomStream(std::uint64_t seed, StreamLabel label, std::uint64_t key);

  std::uint64_t seed_;
  StreamLabel label_;
  std::uint64_t key_;
  std::array<std::uint64_t, 4> state_;
};

// Convenience for per-(round, client) streams.
inline RandomStream make_stream(std::uint64_t seed, Purpose purpose,
                                std::uint64_t round = 0,
                                std::uint64_t client = 0,
                                std::uint64_t sub = 0) {
  return RandomStream(seed, StreamLabel{purpose, round, client, sub});
}

}  // namespace fedlab

#endif  // FEDLAB_RANDOM_H_
