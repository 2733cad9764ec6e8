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
#include "fedlab/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace fedlab {
namespace {

constexpr int kMaxSweeps = 80;

// Requires rows >= cols.
Svd tall_svd(const Matrix& a) {
  const Eigen::Index n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta))
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
          const double wp = w(r, p);
          const double wq = w(r, q);
          w(r, p) = c * wp - s * wq;
          w(r, q) = s * wp + c * wq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vp = v(r, p);
          const double vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&norms](Eigen::Index x, Eigen::Index y) {
                     return norms(x) > norms(y);
                   });
  Svd out;
  out.U = Matrix::Zero(a.rows(), n);
  out.sigma = Vector(n);
  out.V = Matrix(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    out.sigma(k) = norms(j);
    if (norms(j) > 0.0) out.U.col(k) = w.col(j) / norms(j);
    out.V.col(k) = v.col(j);
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const Matrix& a) {
  require(a.rows() >= 1 && a.cols() >= 1, "svd: empty matrix");
  require(static_cast<std::size_t>(a.rows()) <= kMaxSvdDim &&
              static_cast<std::size_t>(a.cols()) <= kMaxSvdDim,
          "svd: matrices are limited to 64 x 64");
  require(a.allFinite(), "svd: non-finite entry");
  if (a.rows() >= a.cols()) return tall_svd(a);
  Svd t = tall_svd(a.transpose());
  std::swap(t.U, t.V);
  return t;
}

Matrix best_rank(const Matrix& a, std::size_t b) {
  const auto r = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  require(b >= 1 && b <= r, "best_rank: rank must lie in [1, min(m, n)]");
  const Svd s = jacobi_svd(a);
  const auto k = static_cast<Eigen::Index>(b);
  return s.U.leftCols(k) * s.sigma.head(k).asDiagonal() *
         s.V.leftCols(k).transpose();
}

}  // namespace fedlab
