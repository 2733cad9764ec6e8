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
#ifndef FEDLAB_CODEC_H_
#define FEDLAB_CODEC_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedlab/types.h"

namespace fedlab {

enum class Codec : std::uint8_t { kNatural9 = 1 };

struct CompressedMessage {
  std::vector<std::uint8_t> payload;
  std::size_t bit_count = 0;
  Codec codec = Codec::kNatural9;
};

// Entry is not a signed power of two in the binary32 normal range.
class CodecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Biased binary32 exponent would reach 255.
class CodecOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Nine bits per coordinate: the field value sign | (biased_exponent << 1)
// is written least-significant bit first into a little-endian bit stream.
// Zero is exponent 0; the sign bit distinguishes -0.0.
CompressedMessage encode_nat(const Vector& x);
Vector decode_nat(const CompressedMessage& message, std::size_t d);

}  // namespace fedlab

#endif  // FEDLAB_CODEC_H_
