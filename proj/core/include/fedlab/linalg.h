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
#ifndef FEDLAB_LINALG_H_
#define FEDLAB_LINALG_H_

#include <cstddef>

#include "fedlab/types.h"

namespace fedlab {

// Thin SVD A = U diag(sigma) V^T with singular values in descending order.
struct Svd {
  Matrix U;
  Vector sigma;
  Matrix V;
};

inline constexpr std::size_t kMaxSvdDim = 64;

// One-sided Jacobi. Matrices up to kMaxSvdDim in each dimension.
Svd jacobi_svd(const Matrix& a);

// Best rank-b approximation sum_{i<=b} sigma_i u_i v_i^T.
Matrix best_rank(const Matrix& a, std::size_t b);

}  // namespace fedlab

#endif  // FEDLAB_LINALG_H_
