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

#ifndef CHIRPMAP_EXPLAIN_HPP
#define CHIRPMAP_EXPLAIN_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chirpmap/learners.hpp"
#include "chirpmap/matrix.hpp"

namespace chirpmap::explain {

// Two forest regressors mapping the feature vector onto each embedding
// coordinate.
struct CoordinateRegressors {
  learners::RandomForest model_x;
  learners::RandomForest model_y;
  double r2_x = 0.0;
  double r2_y = 0.0;
  // The target was constant; R^2 is then reported as 1 by convention.
  bool constant_x = false;
  bool constant_y = false;
};

// Requires >= 10 aligned rows. Defaults (100 trees, ceil(sqrt(d))
// candidate features per split) come from learners::ForestConfig.
CoordinateRegressors fit_coordinate_regressors(
    const Matrix& features, const Matrix& coords,
    const learners::ForestConfig& config);

// Training-set R^2; 1.0 when the target has no variance.
double r_squared(const learners::RandomForest& model, const Matrix& x,
                 std::span<const double> y);

// Path-dependent conditional expectation of a tree's output given that the
// features in `subset` (bit j = feature j) are fixed to x. Splits on other
// features average both children by their training-row shares.
double conditional_expectation(const learners::DecisionTree& tree,
                               std::span<const double> x, std::uint32_t subset);

// Exact Shapley values of one tree by enumerating all 2^d subsets.
std::vector<double> tree_shapley(const learners::DecisionTree& tree,
                                 std::span<const double> x);

struct Attribution {
  std::vector<double> phi;
  double base = 0.0;        // expectation with no feature fixed
  double prediction = 0.0;  // forest output at x
};

// Mean of the per-tree Shapley values. Throws UsageError for non-finite
// input.
Attribution shapley_values(const learners::RandomForest& forest,
                           std::span<const double> x);

enum class CombineRule { kEuclidean, kManhattan };

struct SensitivityMap {
  std::vector<std::string> ids;
  std::vector<std::string> features;
  Matrix phi_x;     // N x d
  Matrix phi_y;     // N x d
  Matrix combined;  // N x d, >= 0
  double base_x = 0.0;
  double base_y = 0.0;
  CombineRule rule = CombineRule::kEuclidean;
};

double combine(double phi_x, double phi_y, CombineRule rule) noexcept;

// Attributes both regressors at every row; throws NumericError if the
// efficiency identity fails by more than 1e-9.
SensitivityMap build_sensitivity_map(const CoordinateRegressors& regressors,
                                     const Matrix& features,
                                     std::vector<std::string> ids,
                                     std::vector<std::string> feature_names,
                                     CombineRule rule = CombineRule::kEuclidean);

struct FeatureSummary {
  std::string feature;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> quantiles;  // at kSummaryLevels
};

inline constexpr double kSummaryLevels[] = {0.1, 0.25, 0.5, 0.75, 0.9};

std::vector<FeatureSummary> sensitivity_summary(const SensitivityMap& map);

// Long format: `id,feature,phi_x,phi_y,combined`.
void write_sensitivity_csv(std::ostream& out, const SensitivityMap& map);
SensitivityMap read_sensitivity_csv(std::istream& in);
nlohmann::json sensitivity_metadata(const SensitivityMap& map,
                                    const CoordinateRegressors& regressors);

}  // namespace chirpmap::explain

#endif  // CHIRPMAP_EXPLAIN_HPP
