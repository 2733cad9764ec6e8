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
#ifndef FEDLAB_COMPRESSORS_H_
#define FEDLAB_COMPRESSORS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedlab/random.h"
#include "fedlab/types.h"

namespace fedlab {

enum class CompressorKind {
  kIdentity,
  kNatural,
  kStandardDither,
  kNaturalDither,
  kGeneralDither,
  kExpDither,
  kRandK,
  kTopK,
  kBiasedRandSparse,
  kAdaptiveSparse,
  kNuRand1,
  kWangni,
  kUnbiasedRounding,
  kBiasedRounding,
  kCompose,
  kInduced,
};

std::string_view kind_name(CompressorKind kind);
std::optional<CompressorKind> kind_from_name(std::string_view name);

struct CompressorParams {
  std::size_t k = 0;
  // Number of nonzero levels for dithering.
  std::size_t s = 0;
  // Norm used by dithering; +infinity selects the max norm.
  double p_norm = 2.0;
  double base = 2.0;
  // General dithering: ascending positive levels ending at 1.
  // Rounding: optional explicit ascending positive levels replacing base^k.
  std::vector<double> levels;
  // Keep probabilities of biased random sparsification.
  std::vector<double> probabilities;
  // Dithering only: transmit the norm after natural compression.
  bool compress_norm = false;

  friend bool operator==(const CompressorParams&,
                         const CompressorParams&) = default;
};

// A compression operator. For kCompose, children are {outer, inner} and the
// operator is outer(inner(x)). For kInduced, children are {biased, unbiased}
// and the operator is biased(x) + unbiased(x - biased(x)).
struct CompressorDescriptor {
  CompressorKind kind = CompressorKind::kIdentity;
  CompressorParams params;
  std::vector<CompressorDescriptor> children;

  friend bool operator==(const CompressorDescriptor&,
                         const CompressorDescriptor&) = default;
};

// Class constants. Variance constants use the omega convention:
// E||C(x)||^2 <= (omega + 1) ||x||^2 for unbiased operators.
// B3 membership holds for delta_scale * C:
// E||delta_scale * C(x) - x||^2 <= (1 - 1/delta) ||x||^2.
struct CompressorClass {
  std::optional<double> omega;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> delta;
  double delta_scale = 1.0;

  bool unbiased() const { return omega.has_value(); }
};

// Factories. Each validates its parameters and throws InvalidArgument.
CompressorDescriptor identity_compressor();
CompressorDescriptor natural_compressor();
CompressorDescriptor standard_dither(std::size_t s, double p_norm = 2.0,
                                     bool compress_norm = false);
CompressorDescriptor natural_dither(std::size_t s, double p_norm = 2.0,
                                    bool compress_norm = false);
CompressorDescriptor exp_dither(double base, std::size_t s,
                                double p_norm = 2.0,
                                bool compress_norm = false);
CompressorDescriptor general_dither(std::vector<double> levels,
                                    double p_norm = 2.0,
                                    bool compress_norm = false);
CompressorDescriptor rand_k(std::size_t k);
CompressorDescriptor top_k(std::size_t k);
CompressorDescriptor biased_rand_sparse(std::vector<double> probabilities);
CompressorDescriptor adaptive_sparse();
CompressorDescriptor nu_rand1();
CompressorDescriptor wangni(std::size_t k);
CompressorDescriptor unbiased_rounding(double base);
CompressorDescriptor unbiased_rounding(std::vector<double> levels);
CompressorDescriptor biased_rounding(double base);
CompressorDescriptor biased_rounding(std::vector<double> levels);

// outer(inner(x)). Both unbiased, or inner a restriction sparsifier
// (top_k, adaptive_sparse, biased_rand_sparse) under an unbiased outer.
CompressorDescriptor compose(CompressorDescriptor outer,
                             CompressorDescriptor inner);
// biased must be in B3 with unit scale; unbiased must be unbiased.
CompressorDescriptor induce(CompressorDescriptor biased,
                            CompressorDescriptor unbiased);

// Structural validation, independent of the dimension.
void validate(const CompressorDescriptor& desc);

// Declared constants at dimension d.
CompressorClass declared_class(const CompressorDescriptor& desc,
                               std::size_t d);

bool is_unbiased(const CompressorDescriptor& desc);

// Randomized logarithmic rounding of one real to a neighbouring power of two.
double c_nat_scalar(double t, RandomStream& rng);

Vector compress(const CompressorDescriptor& desc, const Vector& x,
                RandomStream& rng);

// Mean of ||C(x) - x||^2 / ||x||^2; trial t uses rng.split(t).
double empirical_variance(const CompressorDescriptor& desc, const Vector& x,
                          std::size_t trials, const RandomStream& rng);

// Mean of ||C(x)||^2 / ||x||^2; trial t uses rng.split(t).
double empirical_second_moment(const CompressorDescriptor& desc,
                               const Vector& x, std::size_t trials,
                               const RandomStream& rng);

// Cost of one message at dimension d under the library's bit accounting:
// fixed header + support * (value bits + index bits when sparse).
std::uint64_t bits_per_message(const CompressorDescriptor& desc,
                               std::size_t d);

// ceil(log2(n)) for n >= 1.
unsigned ceil_log2(std::uint64_t n);

// Text form: kind or kind(key=value,...,child,...), for example
// "compose(natural,rand_k(k=10))". Lists use ';' as separator.
std::string to_string(const CompressorDescriptor& desc);
CompressorDescriptor parse_compressor(std::string_view text);

// Dithering internals exposed for tests and codecs.
struct DitheredVector {
  double norm = 0.0;  // emitted norm (possibly compressed)
  std::vector<std::int8_t> sign;
  // 0 means the zero level; j >= 1 means levels[j - 1] of dither_levels().
  std::vector<std::uint32_t> level;
};

// Ascending positive level set of a dithering descriptor, ending at 1.
std::vector<double> dither_levels(const CompressorDescriptor& desc);

DitheredVector dither_encode(const CompressorDescriptor& desc, const Vector& x,
                             RandomStream& rng);
Vector dither_decode(const CompressorDescriptor& desc,
                     const DitheredVector& message);

}  // namespace fedlab

#endif  // FEDLAB_COMPRESSORS_H_
