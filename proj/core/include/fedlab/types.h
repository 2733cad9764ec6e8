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
#ifndef FEDLAB_TYPES_H_
#define FEDLAB_TYPES_H_

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fedlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised for precondition violations on public entry points.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool all_finite(const Vector& x) { return x.allFinite(); }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline void require_finite(const Vector& x, const char* where) {
  if (x.size() == 0) throw InvalidArgument(std::string(where) + ": empty vector");
  if (!x.allFinite())
    throw InvalidArgument(std::string(where) + ": non-finite entry");
}

}  // namespace fedlab

#endif  // FEDLAB_TYPES_H_
