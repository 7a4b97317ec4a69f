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

#include "chirpmap/explain.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/random.hpp"

namespace chirpmap::explain {

using learners::DecisionTree;
using learners::RandomForest;

double r_squared(const RandomForest& model, const Matrix& x,
                 std::span<const double> y) {
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_tot += (y[i] - mean) * (y[i] - mean);
    const double r = y[i] - model.predict_value(x.row(i));
    ss_res += r * r;
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

CoordinateRegressors fit_coordinate_regressors(
    const Matrix& features, const Matrix& coords,
    const learners::ForestConfig& config) {
  if (features.rows() != coords.rows()) {
    throw DataError("fit_coordinate_regressors: rows are not aligned");
  }
  if (features.rows() < 10) {
    throw DataError("fit_coordinate_regressors: need at least 10 rows");
  }
  if (coords.cols() != 2) {
    throw UsageError("fit_coordinate_regressors: embedding must be 2-D");
  }
  const std::size_t n = coords.rows();
  std::vector<double> tx(n), ty(n);
  for (std::size_t i = 0; i < n; ++i) {
    tx[i] = coords(i, 0);
    ty[i] = coords(i, 1);
  }
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };

  learners::ForestConfig cx = config, cy = config;
  cx.seed = derive_seed(config.seed, "axis_x");
  cy.seed = derive_seed(config.seed, "axis_y");

  CoordinateRegressors out;
  out.model_x = learners::fit_forest(features, tx, learners::TreeTask::kRegression, cx);
  out.model_y = learners::fit_forest(features, ty, learners::TreeTask::kRegression, cy);
  out.constant_x = constant(tx);
  out.constant_y = constant(ty);
  out.r2_x = r_squared(out.model_x, features, tx);
  out.r2_y = r_squared(out.model_y, features, ty);
  return out;
}

double conditional_expectation(const DecisionTree& tree,
                               std::span<const double> x, std::uint32_t subset) {
  // Explicit stack of (node, weight) pairs.
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  double value = 0.0;
  while (!stack.empty()) {
    const auto [id, weight] = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      value += weight * node.value.front();
      continue;
    }
    const auto f = static_cast<std::uint32_t>(node.feature);
    if (subset & (1u << f)) {
      stack.push_back({x[f] <= node.threshold ? node.left : node.right, weight});
    } else {
      const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double total = l.n_samples + r.n_samples;
      stack.push_back({node.right, weight * (r.n_samples / total)});
      stack.push_back({node.left, weight * (l.n_samples / total)});
    }
  }
  return value;
}

std::vector<double> tree_shapley(const DecisionTree& tree,
                                 std::span<const double> x) {
  const auto d = static_cast<std::size_t>(tree.n_features);
  if (d == 0 || d > 16) throw UsageError("tree_shapley: need 1..16 features");
  if (tree.task != learners::TreeTask::kRegression) {
    throw UsageError("tree_shapley: regression trees only");
  }
  const std::uint32_t subsets = 1u << d;
  std::vector<double> v(subsets);
  for (std::uint32_t s = 0; s < subsets; ++s) v[s] = conditional_expectation(tree, x, s);

  // weight(|S|) = |S|! (d - |S| - 1)! / d!
  std::vector<double> weight(d);
  std::vector<double> fact(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
  for (std::size_t s = 0; s < d; ++s) weight[s] = fact[s] * fact[d - s - 1] / fact[d];

  std::vector<double> phi(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      phi[j] += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

Attribution shapley_values(const RandomForest& forest, std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw UsageError("shapley_values: non-finite instance");
  }
  if (x.size() != static_cast<std::size_t>(forest.n_features)) {
    throw UsageError("shapley_values: instance has the wrong dimension");
  }
  Attribution a;
  a.phi.assign(x.size(), 0.0);
  for (const auto& tree : forest.trees) {
    const auto phi = tree_shapley(tree, x);
    for (std::size_t j = 0; j < phi.size(); ++j) a.phi[j] += phi[j];
    a.base += conditional_expectation(tree, x, 0);
  }
  const double nt = static_cast<double>(forest.trees.size());
  for (double& p : a.phi) p /= nt;
  a.base /= nt;
  a.prediction = forest.predict_value(x);
  return a;
}

double combine(double phi_x, double phi_y, CombineRule rule) noexcept {
  return rule == CombineRule::kEuclidean ? std::sqrt(phi_x * phi_x + phi_y * phi_y)
                                         : std::abs(phi_x) + std::abs(phi_y);
}

SensitivityMap build_sensitivity_map(const CoordinateRegressors& regressors,
                                     const Matrix& features,
                                     std::vector<std::string> ids,
                                     std::vector<std::string> feature_names,
                                     CombineRule rule) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (!ids.empty() && ids.size() != n) {
    throw UsageError("build_sensitivity_map: ids are not aligned");
  }
  if (ids.empty()) {
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < d; ++j) feature_names.push_back(fmt::format("f{}", j));
  }
  SensitivityMap map;
  map.ids = std::move(ids);
  map.features = std::move(feature_names);
  map.phi_x = Matrix(n, d);
  map.phi_y = Matrix(n, d);
  map.combined = Matrix(n, d);
  map.rule = rule;

  for (double v : features.data()) {
    if (!std::isfinite(v)) throw UsageError("build_sensitivity_map: non-finite feature");
  }
  if (static_cast<int>(d) != regressors.model_x.n_features ||
      static_cast<int>(d) != regressors.model_y.n_features) {
    throw UsageError("build_sensitivity_map: feature count differs from the regressors");
  }

  std::vector<double> err(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.row(i);
    const Attribution ax = shapley_values(regressors.model_x, x);
    const Attribution ay = shapley_values(regressors.model_y, x);
    double sx = ax.base, sy = ay.base;
    for (std::size_t j = 0; j < d; ++j) {
      map.phi_x(i, j) = ax.phi[j];
      map.phi_y(i, j) = ay.phi[j];
      map.combined(i, j) = combine(ax.phi[j], ay.phi[j], rule);
      sx += ax.phi[j];
      sy += ay.phi[j];
    }
    err[i] = std::max(std::abs(sx - ax.prediction), std::abs(sy - ay.prediction));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (err[i] > 1e-9) {
      throw NumericError(fmt::format(
          "shapley efficiency violated at row {} by {}", i, err[i]));
    }
  }
  // The empty-subset expectation does not depend on the instance.
  if (n > 0) {
    map.base_x = shapley_values(regressors.model_x, features.row(0)).base;
    map.base_y = shapley_values(regressors.model_y, features.row(0)).base;
  }
  return map;
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double level) {
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<FeatureSummary> sensitivity_summary(const SensitivityMap& map) {
  const std::size_t n = map.combined.rows();
  if (n == 0) throw UsageError("sensitivity_summary: empty map");
  std::vector<FeatureSummary> out;
  for (std::size_t j = 0; j < map.combined.cols(); ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = map.combined(i, j);
    FeatureSummary s;
    s.feature = j < map.features.size() ? map.features[j] : fmt::format("f{}", j);
    for (double v : col) s.mean += v;
    s.mean /= static_cast<double>(n);
    std::sort(col.begin(), col.end());
    s.min = col.front();
    s.max = col.back();
    for (double level : kSummaryLevels) s.quantiles.push_back(quantile(col, level));
    out.push_back(std::move(s));
  }
  return out;
}

void write_sensitivity_csv(std::ostream& out, const SensitivityMap& map) {
  out << "id,feature,phi_x,phi_y,combined\n";
  for (std::size_t i = 0; i < map.combined.rows(); ++i) {
    for (std::size_t j = 0; j < map.combined.cols(); ++j) {
      out << fmt::format("{},{},{},{},{}\n", map.ids[i], map.features[j],
                         map.phi_x(i, j), map.phi_y(i, j), map.combined(i, j));
    }
  }
}

SensitivityMap read_sensitivity_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("sensitivity file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,feature,phi_x,phi_y,combined") {
    throw DataError("sensitivity file has an unexpected header: " + line);
  }
  struct Row {
    std::string id, feature;
    double v[3];
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      parts.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (parts.size() != 5) throw DataError("sensitivity file: malformed line");
    Row r{parts[0], parts[1], {}};
    for (int k = 0; k < 3; ++k) {
      const auto& t = parts[static_cast<std::size_t>(k) + 2];
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), r.v[k]);
      if (ec != std::errc() || p != t.data() + t.size())
        throw DataError("sensitivity file: bad number '" + t + "'");
    }
    rows.push_back(std::move(r));
  }
  SensitivityMap map;
  for (const auto& r : rows) {
    if (std::find(map.features.begin(), map.features.end(), r.feature) == map.features.end())
      map.features.push_back(r.feature);
    if (map.ids.empty() || map.ids.back() != r.id) map.ids.push_back(r.id);
  }
  const std::size_t n = map.ids.size(), d = map.features.size();
  if (rows.size() != n * d) throw DataError("sensitivity file: incomplete grid");
  map.phi_x = Matrix(n, d);
  map.phi_y = Matrix(n, d);
  map.combined = Matrix(n, d);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = k / d, j = k % d;
    if (rows[k].feature != map.features[j] || rows[k].id != map.ids[i])
      throw DataError("sensitivity file: rows out of order");
    map.phi_x(i, j) = rows[k].v[0];
    map.phi_y(i, j) = rows[k].v[1];
    map.combined(i, j) = rows[k].v[2];
  }
  return map;
}

nlohmann::json sensitivity_metadata(const SensitivityMap& map,
                                    const CoordinateRegressors& regressors) {
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : sensitivity_summary(map)) {
    summary.push_back({{"feature", s.feature},
                       {"mean", s.mean},
                       {"min", s.min},
                       {"max", s.max},
                       {"quantile_levels", kSummaryLevels},
                       {"quantiles", s.quantiles}});
  }
  return {{"base_values", {{"x", map.base_x}, {"y", map.base_y}}},
          {"r2", {{"x", regressors.r2_x}, {"y", regressors.r2_y}}},
          {"constant_target", {{"x", regressors.constant_x}, {"y", regressors.constant_y}}},
          {"combine_rule",
           map.rule == CombineRule::kEuclidean ? "euclidean" : "manhattan"},
          {"features", map.features},
          {"summary", summary}};
}

}  // namespace chirpmap::explain
