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
#include "fedlab/metrics_sink.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fedlab/types.h"

namespace fedlab {

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

const char* CsvMetricsSink::header() {
  return "round,f_gap,grad_norm_sq,dist_sq,bits_up,bits_down,participants";
}

CsvMetricsSink::CsvMetricsSink(std::string path, Flush flush)
    : path_(std::move(path)), flush_(flush) {
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_)
    throw std::runtime_error("cannot open metrics file '" + path_ + "'");
  out_ << header() << '\n';
}

CsvMetricsSink::~CsvMetricsSink() {
  if (out_.is_open()) out_.close();
}

void CsvMetricsSink::write(const RoundRecord& r) {
  require(out_.is_open(), "metrics sink is closed");
  require(rows_ == 0 || r.round > last_round_,
          "metrics sink: rounds must be written in increasing order");
  out_ << r.round << ',' << format_real(r.f_gap) << ','
       << format_real(r.grad_norm_sq) << ',' << format_real(r.dist_sq) << ','
       << r.bits_up << ',' << r.bits_down << ',';
  for (std::size_t i = 0; i < r.participants.size(); ++i) {
    if (i) out_ << ';';
    out_ << r.participants[i];
  }
  out_ << '\n';
  if (flush_ == Flush::kEveryRow) out_.flush();
  if (!out_)
    throw std::runtime_error("write failed for metrics file '" + path_ + "'");
  last_round_ = r.round;
  ++rows_;
}

void CsvMetricsSink::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail())
    throw std::runtime_error("close failed for metrics file '" + path_ + "'");
}

Quartiles quartiles(std::vector<double> values) {
  require(!values.empty(), "quartiles: no values");
  if (std::any_of(values.begin(), values.end(),
                  [](double v) { return std::isnan(v); })) {
    const double nan = std::nan("");
    return {nan, nan, nan, nan};
  }
  std::sort(values.begin(), values.end());
  auto at = [&values](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  Quartiles out;
  out.median = at(0.5);
  out.q1 = at(0.25);
  out.q3 = at(0.75);
  out.iqr = out.q3 - out.q1;
  return out;
}

}  // namespace fedlab
