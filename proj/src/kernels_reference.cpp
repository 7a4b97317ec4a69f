/*
 * Copyright 2026 The chirpmap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Serial reference kernels. Straight double loops with an explicit q
// matrix; no reuse of intermediate row sums.

#include <cmath>

#include "chirpmap/error.hpp"
#include "chirpmap/kernels.hpp"

namespace chirpmap::kernels::reference {

Matrix pairwise_sq_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - x(j, k);
        s += diff * diff;
      }
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

Matrix conditional_affinities(const Matrix& sq_dists, double perplexity,
                              std::vector<RowCalibration>& calibrations,
                              double tol, int max_steps) {
  const std::size_t n = sq_dists.rows();
  Matrix p(n, n);
  calibrations.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    calibrations[i] =
        calibrate_row(sq_dists.row(i), i, perplexity, p.row(i), tol, max_steps);
  }
  return p;
}

StudentT student_t_weights(const Matrix& y) {
  const std::size_t n = y.rows();
  StudentT out{Matrix(n, n), 0.0};
  // Row sums first, then their total: the order the parallel kernel uses.
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < y.cols(); ++k) {
        const double diff = y(i, k) - y(j, k);
        d2 += diff * diff;
      }
      out.weights(i, j) = 1.0 / (1.0 + d2);
      row += out.weights(i, j);
    }
    out.total += row;
  }
  return out;
}

double tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration,
                     Matrix& grad) {
  const std::size_t n = y.rows();
  const StudentT st = student_t_weights(y);
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) q(i, j) = st.weights(i, j) / st.total;

  // Same operation order as the parallel kernel, so results match bitwise.
  grad = Matrix(n, y.cols());
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_kl = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double coeff = 4.0 * (exaggeration * p(i, j) - q(i, j)) * st.weights(i, j);
      for (std::size_t k = 0; k < y.cols(); ++k) {
        grad(i, k) += coeff * (y(i, k) - y(j, k));
      }
      if (p(i, j) > 0.0) row_kl += p(i, j) * std::log(p(i, j) / q(i, j));
    }
    kl += row_kl;
  }
  return kl;
}

}  // namespace chirpmap::kernels::reference
