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

#include <Eigen/Dense>

#include <cmath>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"

namespace chirpmap::learners {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) without overflow.
double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double linear(std::span<const double> w, double b, std::span<const double> x) {
  double z = b;
  for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[k];
  return z;
}

}  // namespace

double LogisticModel::probability(std::span<const double> x) const {
  return sigmoid(linear(weights, bias, x));
}

double penalized_log_likelihood(const LabeledPoints& data,
                                std::span<const double> weights, double bias,
                                double l2_lambda) {
  const std::size_t n = data.coords.rows();
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = linear(weights, bias, data.coords.row(i));
    ll += data.labels[i] == 1 ? log_sigmoid(z) : log_sigmoid(-z);
  }
  double ww = 0.0;
  for (double w : weights) ww += w * w;
  return ll / static_cast<double>(n) - 0.5 * l2_lambda * ww;
}

std::vector<double> penalized_gradient(const LabeledPoints& data,
                                       std::span<const double> weights,
                                       double bias, double l2_lambda) {
  const std::size_t n = data.coords.rows();
  const std::size_t d = weights.size();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.coords.row(i);
    const double r = static_cast<double>(data.labels[i]) -
                     sigmoid(linear(weights, bias, x));
    for (std::size_t k = 0; k < d; ++k) g[k] += r * x[k];
    g[d] += r;
  }
  for (double& v : g) v /= static_cast<double>(n);
  for (std::size_t k = 0; k < d; ++k) g[k] -= l2_lambda * weights[k];
  return g;
}

LogisticModel fit_logistic(const LabeledPoints& data,
                           const LogisticConfig& config) {
  validate(data);
  if (!(config.l2_lambda >= 0.0)) throw UsageError("logreg: l2_lambda must be >= 0");
  const std::size_t n = data.coords.rows();
  const std::size_t d = data.coords.cols();

  LogisticModel model;
  model.weights.assign(d, 0.0);
  double objective =
      penalized_log_likelihood(data, model.weights, model.bias, config.l2_lambda);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const std::vector<double> g =
        penalized_gradient(data, model.weights, model.bias, config.l2_lambda);
    Eigen::Map<const Eigen::VectorXd> grad(g.data(), static_cast<Eigen::Index>(d + 1));
    model.gradient_norm = grad.norm();
    model.iterations = iter;
    if (model.gradient_norm < config.tol) {
      model.converged = true;
      break;
    }

    // Ascent direction: Newton step on the concave objective, falling back
    // to the plain gradient if the curvature is degenerate.
    Eigen::MatrixXd hess =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1),
                              static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd xe(static_cast<Eigen::Index>(d + 1));
      for (std::size_t k = 0; k < d; ++k)
        xe(static_cast<Eigen::Index>(k)) = data.coords(i, k);
      xe(static_cast<Eigen::Index>(d)) = 1.0;
      const double p = sigmoid(linear(model.weights, model.bias, data.coords.row(i)));
      hess.noalias() += p * (1.0 - p) * xe * xe.transpose();
    }
    hess /= static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k)
      hess(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +=
          config.l2_lambda;
    Eigen::VectorXd dir = hess.ldlt().solve(grad);
    if (!dir.allFinite() || dir.dot(grad) <= 0.0) dir = grad;

    // Backtracking (Armijo) along dir.
    const double slope = dir.dot(grad);
    double step = 1.0;
    bool accepted = false;
    std::vector<double> w_new(d);
    double b_new = model.bias;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t k = 0; k < d; ++k)
        w_new[k] = model.weights[k] + step * dir(static_cast<Eigen::Index>(k));
      b_new = model.bias + step * dir(static_cast<Eigen::Index>(d));
      const double candidate =
          penalized_log_likelihood(data, w_new, b_new, config.l2_lambda);
      if (candidate >= objective + 1e-4 * step * slope) {
        objective = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.weights = w_new;
    model.bias = b_new;
    model.iterations = iter + 1;
  }

  if (!model.converged) {
    const auto g =
        penalized_gradient(data, model.weights, model.bias, config.l2_lambda);
    double s = 0.0;
    for (double v : g) s += v * v;
    model.gradient_norm = std::sqrt(s);
    model.converged = model.gradient_norm < config.tol;
  }
  return model;
}

}  // namespace chirpmap::learners
