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

#ifndef CHIRPMAP_KERNELS_HPP
#define CHIRPMAP_KERNELS_HPP

// Data-parallel O(N^2) inner loops of the embedding. The top-level
// functions use OpenMP across rows; each row's arithmetic is serial and
// cross-row reductions run in fixed index order, so the result is
// bit-identical for any thread count. `reference::` holds plain serial
// versions kept for tests and benchmarks.

#include <cstddef>
#include <span>
#include <vector>

#include "chirpmap/matrix.hpp"

namespace chirpmap::kernels {

struct RowCalibration {
  double beta = 1.0;        // precision of the Gaussian kernel (1 / 2 sigma^2)
  double perplexity = 0.0;  // 2^H achieved by the returned row
  int steps = 0;
  bool converged = false;
};

inline constexpr double kBetaMin = 1e-20;
inline constexpr double kBetaMax = 1e20;

// Fills `out_row` (length N, zero at `self`) with p_{j|i} proportional to
// exp(-beta * d2[j]) and searches beta so that 2^H matches `perplexity`
// within `tol`. Falls back to the best beta seen after `max_steps`.
// Throws NumericError naming the row when every distance is zero.
RowCalibration calibrate_row(std::span<const double> sq_dists,
                             std::size_t self, double perplexity,
                             std::span<double> out_row, double tol = 1e-5,
                             int max_steps = 50);

Matrix pairwise_sq_distances(const Matrix& x);

// Row-conditional affinities for every row; `calibrations` is resized to N.
Matrix conditional_affinities(const Matrix& sq_dists, double perplexity,
                              std::vector<RowCalibration>& calibrations,
                              double tol = 1e-5, int max_steps = 50);

// Unnormalized Student-t weights w_ij = 1 / (1 + |y_i - y_j|^2), zero
// diagonal, and their total over i != j.
struct StudentT {
  Matrix weights;
  double total = 0.0;
};
StudentT student_t_weights(const Matrix& y);

// Writes dC/dy for affinities `p * exaggeration` into `grad` (N x 2) and
// returns KL(p || q) for the unexaggerated p at the same coordinates.
double tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration,
                     Matrix& grad);

namespace reference {

Matrix pairwise_sq_distances(const Matrix& x);
Matrix conditional_affinities(const Matrix& sq_dists, double perplexity,
                              std::vector<RowCalibration>& calibrations,
                              double tol = 1e-5, int max_steps = 50);
StudentT student_t_weights(const Matrix& y);
double tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration,
                     Matrix& grad);

}  // namespace reference

}  // namespace chirpmap::kernels

#endif  // CHIRPMAP_KERNELS_HPP
