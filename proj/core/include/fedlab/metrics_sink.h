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
#ifndef FEDLAB_METRICS_SINK_H_
#define FEDLAB_METRICS_SINK_H_

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "fedlab/algorithms.h"

namespace fedlab {

// printf "%.17g"; NaN prints as "nan".
std::string format_real(double value);

// One CSV row per round: round,f_gap,grad_norm_sq,dist_sq,bits_up,bits_down,
// participants. Participants are ';'-separated client indices.
class CsvMetricsSink {
 public:
  enum class Flush { kEveryRow, kOnClose };

  explicit CsvMetricsSink(std::string path, Flush flush = Flush::kOnClose);
  ~CsvMetricsSink();
  CsvMetricsSink(const CsvMetricsSink&) = delete;
  CsvMetricsSink& operator=(const CsvMetricsSink&) = delete;

  // Rounds must be written in increasing order.
  void write(const RoundRecord& record);
  void close();

  const std::string& path() const { return path_; }
  std::size_t rows() const { return rows_; }

  static const char* header();

 private:
  std::string path_;
  Flush flush_;
  std::ofstream out_;
  std::size_t rows_ = 0;
  std::size_t last_round_ = 0;
};

struct Quartiles {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
};

// Linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

}  // namespace fedlab

#endif  // FEDLAB_METRICS_SINK_H_
