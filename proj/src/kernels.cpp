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

#include "chirpmap/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "chirpmap/error.hpp"

namespace chirpmap::kernels {
namespace {

// Perplexity of the row at `beta`. Distances are shifted by their minimum,
// which cancels in the normalization and keeps exp() from underflowing.
double row_perplexity(std::span<const double> d2, std::size_t self,
                      double d2_min, double beta, std::span<double> out) {
  double z = 0.0;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    out[j] = j == self ? 0.0 : std::exp(-beta * (d2[j] - d2_min));
    z += out[j];
  }
  double weighted = 0.0;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    if (j == self) continue;
    out[j] /= z;
    weighted += out[j] * (d2[j] - d2_min);
  }
  const double entropy_nats = std::log(z) + beta * weighted;
  return std::exp(entropy_nats);
}

}  // namespace

RowCalibration calibrate_row(std::span<const double> sq_dists,
                             std::size_t self, double perplexity,
                             std::span<double> out_row, double tol,
                             int max_steps) {
  double d2_min = std::numeric_limits<double>::infinity();
  double d2_max = 0.0;
  for (std::size_t j = 0; j < sq_dists.size(); ++j) {
    if (j == self) continue;
    d2_min = std::min(d2_min, sq_dists[j]);
    d2_max = std::max(d2_max, sq_dists[j]);
  }
  if (!(d2_max > 0.0)) {
    throw NumericError(fmt::format(
        "perplexity unreachable for row {}: all distances are zero", self));
  }

  RowCalibration cal;
  double lo = kBetaMin;
  double hi = kBetaMax;
  bool lo_bracketed = false;
  bool hi_bracketed = false;
  double beta = 1.0;
  double best_beta = beta;
  double best_err = std::numeric_limits<double>::infinity();
  double best_perp = 0.0;

  for (int step = 0; step < max_steps; ++step) {
    const double perp = row_perplexity(sq_dists, self, d2_min, beta, out_row);
    cal.steps = step + 1;
    const double err = std::abs(perp - perplexity);
    if (err < best_err) {
      best_err = err;
      best_beta = beta;
      best_perp = perp;
    }
    if (err < tol) {
      cal.converged = true;
      break;
    }
    if (perp > perplexity) {
      // Distribution too flat: sharpen.
      lo = beta;
      lo_bracketed = true;
      beta = hi_bracketed ? 0.5 * (lo + hi) : std::min(beta * 2.0, kBetaMax);
    } else {
      hi = beta;
      hi_bracketed = true;
      beta = lo_bracketed ? 0.5 * (lo + hi) : std::max(beta * 0.5, kBetaMin);
    }
  }

  if (!cal.converged) {
    best_perp = row_perplexity(sq_dists, self, d2_min, best_beta, out_row);
  }
  cal.beta = cal.converged ? beta : best_beta;
  cal.perplexity = best_perp;
  return cal;
}

Matrix pairwise_sq_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      d(i, j) = i == j ? 0.0 : squared_distance(xi, x.row(j));
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
  // Exceptions cannot cross the parallel region; keep the first by row.
  std::vector<std::string> failures(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      calibrations[i] =
          calibrate_row(sq_dists.row(i), i, perplexity, p.row(i), tol, max_steps);
    } catch (const NumericError& e) {
      failures[i] = e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw NumericError(f);
  }
  return p;
}

StudentT student_t_weights(const Matrix& y) {
  const std::size_t n = y.rows();
  StudentT out{Matrix(n, n), 0.0};
  std::vector<double> row_sums(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = y.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = 1.0 / (1.0 + squared_distance(yi, y.row(j)));
      out.weights(i, j) = w;
      s += w;
    }
    row_sums[i] = s;
  }
  for (double s : row_sums) out.total += s;
  return out;
}

double tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration,
                     Matrix& grad) {
  const std::size_t n = y.rows();
  const std::size_t dims = y.cols();
  const StudentT st = student_t_weights(y);
  const double z = st.total;
  grad = Matrix(n, dims);
  std::vector<double> row_kl(n, 0.0);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = y.row(i);
    auto gi = grad.row(i);
    double kl = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = st.weights(i, j);
      const double pij = p(i, j);
      const double q = w / z;
      const double coeff = 4.0 * (exaggeration * pij - q) * w;
      const auto yj = y.row(j);
      for (std::size_t k = 0; k < dims; ++k) gi[k] += coeff * (yi[k] - yj[k]);
      if (pij > 0.0) kl += pij * std::log(pij / q);
    }
    row_kl[i] = kl;
  }

  double kl = 0.0;
  for (double v : row_kl) kl += v;
  return kl;
}

}  // namespace chirpmap::kernels
