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

#include <algorithm>
#include <cmath>
#include <limits>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"

namespace chirpmap::learners {

double kernel_value(KernelKind kind, double gamma, std::span<const double> a,
                    std::span<const double> b) {
  if (kind == KernelKind::kLinear) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }
  return std::exp(-gamma * squared_distance(a, b));
}

double default_gamma(const Matrix& x) {
  const auto& v = x.data();
  if (v.empty()) return 1.0;
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double e : v) var += (e - mean) * (e - mean);
  var /= static_cast<double>(v.size());
  return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

double SvmModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < dual_coef.size(); ++i) {
    f += dual_coef[i] * kernel_value(kernel, gamma, support_vectors.row(i), x);
  }
  return f;
}

SvmModel fit_svm(const LabeledPoints& data, const SvmConfig& config) {
  validate(data);
  if (!(config.C > 0.0)) throw UsageError("svm: C must be positive");
  if (!(config.tol > 0.0)) throw UsageError("svm: tol must be positive");

  const std::size_t n = data.coords.rows();
  SvmModel model;
  model.kernel = config.kernel;
  model.C = config.C;
  model.gamma = config.gamma > 0.0 ? config.gamma : default_gamma(data.coords);

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[i] == 1 ? 1.0 : -1.0;

  // Q_ij = y_i y_j K(x_i, x_j)
  Matrix q(n, n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q(i, j) = y[i] * y[j] *
                kernel_value(model.kernel, model.gamma, data.coords.row(i),
                             data.coords.row(j));
    }
  }

  const double c = config.C;
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c);
  };

  long iter = 0;
  for (;;) {
    double m = -std::numeric_limits<double>::infinity();
    double big_m = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > m) {
        m = v;
        i = t;
      }
      if (in_low(t) && v < big_m) {
        big_m = v;
        j = t;
      }
    }
    model.max_violation = (i == n || j == n) ? 0.0 : m - big_m;
    if (i == n || j == n || m - big_m < config.tol) {
      model.converged = true;
      break;
    }
    if (iter >= config.max_iterations) break;
    ++iter;

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += q(t, i) * di + q(t, j) * dj;
    }
  }
  model.iterations = iter;

  // rho: mean of y_t * grad_t over free multipliers, else the midpoint of
  // the feasible interval.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                    : 0.5 * (ub + lb);
  model.bias = -rho;

  double quad = 0.0, lin = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    lin += alpha[t];
    // a' Q a = sum_t a_t (grad_t + 1)
    quad += alpha[t] * (grad[t] + 1.0);
  }
  model.dual_objective = lin - 0.5 * quad;

  std::size_t n_sv = 0;
  for (double a : alpha) n_sv += a > 0.0 ? 1 : 0;
  model.support_vectors = Matrix(n_sv, data.coords.cols());
  std::size_t k = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0.0) continue;
    std::copy(data.coords.row(t).begin(), data.coords.row(t).end(),
              model.support_vectors.row(k).begin());
    model.dual_coef.push_back(alpha[t] * y[t]);
    ++k;
  }
  model.alpha = std::move(alpha);
  return model;
}

}  // namespace chirpmap::learners
