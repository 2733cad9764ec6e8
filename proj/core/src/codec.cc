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
#include "fedlab/codec.h"

#include <cmath>
#include <string>

namespace fedlab {
namespace {

constexpr int kBitsPerEntry = 9;
constexpr int kBias = 127;

void put_bit(std::vector<std::uint8_t>& bytes, std::size_t pos, bool bit) {
  if (bit) bytes[pos / 8] |= static_cast<std::uint8_t>(1u << (pos % 8));
}

bool get_bit(const std::vector<std::uint8_t>& bytes, std::size_t pos) {
  return (bytes[pos / 8] >> (pos % 8)) & 1u;
}

std::uint32_t field_of(double v, std::size_t index) {
  const std::uint32_t sign = std::signbit(v) ? 1u : 0u;
  if (v == 0.0) return sign;
  if (!std::isfinite(v))
    throw CodecError("encode_nat: entry " + std::to_string(index) +
                     " is not finite");
  int e = 0;
  const double mantissa = std::frexp(std::abs(v), &e);
  if (mantissa != 0.5)
    throw CodecError("encode_nat: entry " + std::to_string(index) +
                     " is not a power of two; compress it first");
  const int biased = e - 1 + kBias;
  if (biased >= 255)
    throw CodecOverflow("encode_nat: entry " + std::to_string(index) +
                        " overflows the 8-bit exponent");
  if (biased <= 0)
    throw CodecError("encode_nat: entry " + std::to_string(index) +
                     " is below the binary32 normal range");
  return sign | static_cast<std::uint32_t>(biased) << 1;
}

}  // namespace

CompressedMessage encode_nat(const Vector& x) {
  CompressedMessage message;
  message.codec = Codec::kNatural9;
  message.bit_count = static_cast<std::size_t>(x.size()) * kBitsPerEntry;
  message.payload.assign((message.bit_count + 7) / 8, 0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const std::uint32_t field = field_of(x[i], static_cast<std::size_t>(i));
    const std::size_t base = static_cast<std::size_t>(i) * kBitsPerEntry;
    for (int b = 0; b < kBitsPerEntry; ++b)
      put_bit(message.payload, base + b, (field >> b) & 1u);
  }
  return message;
}

Vector decode_nat(const CompressedMessage& message, std::size_t d) {
  if (message.codec != Codec::kNatural9)
    throw CodecError("decode_nat: unexpected codec");
  if (message.bit_count != d * kBitsPerEntry ||
      message.payload.size() != (message.bit_count + 7) / 8)
    throw CodecError("decode_nat: message length does not match dimension " +
                     std::to_string(d));
  Vector out(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    std::uint32_t field = 0;
    for (int b = 0; b < kBitsPerEntry; ++b)
      field |= static_cast<std::uint32_t>(
                   get_bit(message.payload, i * kBitsPerEntry + b))
               << b;
    const bool negative = field & 1u;
    const int biased = static_cast<int>(field >> 1);
    if (biased == 255) throw CodecError("decode_nat: reserved exponent 255");
    const double magnitude = biased == 0 ? 0.0 : std::ldexp(1.0, biased - kBias);
    out[static_cast<Eigen::Index>(i)] = negative ? -magnitude : magnitude;
  }
  return out;
}

}  // namespace fedlab
