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

#ifndef CHIRPMAP_LEARNERS_HPP
#define CHIRPMAP_LEARNERS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chirpmap/matrix.hpp"

namespace chirpmap::learners {

// Points in the embedding plane with binary labels {0, 1}.
struct LabeledPoints {
  Matrix coords;
  std::vector<int> labels;
};

// Throws UsageError unless rows align, labels are binary and, when
// `require_both_classes`, both classes occur.
void validate(const LabeledPoints& data, bool require_both_classes = true);

// 1 - sum_c (n_c / n)^2
double gini_impurity(std::span<const double> counts);

// ---------------------------------------------------------------------------
// Decision trees and forests

enum class TreeTask { kClassification, kRegression };

struct TreeConfig {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int max_features = 0;  // candidate features per split; 0 = all
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double n_samples = 0.0;  // training rows routed here, with multiplicity
  // Class counts for classification, {mean target} for regression.
  std::vector<double> value;

  bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
 public:
  TreeTask task = TreeTask::kClassification;
  int n_features = 0;
  int n_classes = 0;  // classification only
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  // Majority class of the leaf; ties go to the lower class index.
  int predict_class(std::span<const double> x) const;
  double predict_value(std::span<const double> x) const;
  int depth() const;
};

// Greedy CART. `rows` selects (possibly repeated) training rows; empty
// means every row once. Classification targets must be integral class ids.
DecisionTree fit_tree(const Matrix& x, std::span<const double> targets,
                      TreeTask task, const TreeConfig& config,
                      std::uint64_t seed,
                      std::span<const std::size_t> rows = {});

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;
  int min_samples_split = 2;
  int max_features = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

class RandomForest {
 public:
  TreeTask task = TreeTask::kClassification;
  int n_features = 0;
  int n_classes = 0;
  std::vector<DecisionTree> trees;

  // Majority vote of the trees; ties go to class 0.
  int predict_class(std::span<const double> x) const;
  // Mean of the tree predictions.
  double predict_value(std::span<const double> x) const;
};

// Trees are fitted in parallel from per-tree seeds derived from
// config.seed, so the forest does not depend on the thread count.
RandomForest fit_forest(const Matrix& x, std::span<const double> targets,
                        TreeTask task, const ForestConfig& config);
RandomForest fit_random_forest(const LabeledPoints& data,
                               const ForestConfig& config);

// ---------------------------------------------------------------------------
// Soft-margin SVM

enum class KernelKind { kLinear, kRbf };

struct SvmConfig {
  double C = 1.0;
  KernelKind kernel = KernelKind::kRbf;
  double gamma = 0.0;  // <= 0: 1 / (d * variance of all inputs)
  double tol = 1e-3;
  long max_iterations = 1'000'000;
};

struct SvmModel {
  KernelKind kernel = KernelKind::kRbf;
  double gamma = 0.0;
  double C = 1.0;
  Matrix support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i of each support vector
  double bias = 0.0;
  // Training diagnostics.
  std::vector<double> alpha;  // one multiplier per training row
  double dual_objective = 0.0;  // sum(alpha) - 1/2 alpha' Q alpha
  double max_violation = 0.0;   // m(alpha) - M(alpha) at termination
  long iterations = 0;
  bool converged = false;

  double decision(std::span<const double> x) const;
  int predict(std::span<const double> x) const {
    return decision(x) >= 0.0 ? 1 : 0;
  }
};

double kernel_value(KernelKind kind, double gamma, std::span<const double> a,
                    std::span<const double> b);
double default_gamma(const Matrix& x);

// Solves the dual with SMO, choosing the maximal violating pair each step.
// Returns the last iterate flagged converged=false if the budget runs out.
SvmModel fit_svm(const LabeledPoints& data, const SvmConfig& config);

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticConfig {
  double l2_lambda = 1e-4;
  int max_iters = 500;
  double tol = 1e-6;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  double probability(std::span<const double> x) const;
  int predict(std::span<const double> x) const {
    return probability(x) >= 0.5 ? 1 : 0;
  }
};

// Mean log-likelihood minus (lambda/2)|w|^2; the bias is not penalized.
double penalized_log_likelihood(const LabeledPoints& data,
                                std::span<const double> weights, double bias,
                                double l2_lambda);
// Gradient of the above, weights first and the bias last.
std::vector<double> penalized_gradient(const LabeledPoints& data,
                                       std::span<const double> weights,
                                       double bias, double l2_lambda);

LogisticModel fit_logistic(const LabeledPoints& data,
                           const LogisticConfig& config);

// ---------------------------------------------------------------------------
// k-nearest neighbours

struct KnnConfig {
  int k = 5;
};

struct KnnModel {
  Matrix points;
  std::vector<int> labels;
  int k = 5;

  // Indices of the k nearest rows ordered by (distance, index).
  std::vector<std::size_t> neighbors(std::span<const double> x) const;
  // Majority vote; a tied vote goes to the class of the nearest neighbour.
  int predict(std::span<const double> x) const;
};

KnnModel fit_knn(const LabeledPoints& data, const KnnConfig& config);

// ---------------------------------------------------------------------------
// Uniform model handle

enum class ClassifierKind { kRandomForest, kSvm, kLogisticRegression, kKnn };

inline constexpr ClassifierKind kAllClassifiers[] = {
    ClassifierKind::kRandomForest, ClassifierKind::kSvm,
    ClassifierKind::kLogisticRegression, ClassifierKind::kKnn};

// Short names: rf, svm, logreg, knn.
std::string_view kind_name(ClassifierKind kind) noexcept;
std::optional<ClassifierKind> parse_kind(std::string_view name) noexcept;

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kRandomForest;
  ForestConfig forest;
  SvmConfig svm;
  LogisticConfig logistic;
  KnnConfig knn;
};

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::kRandomForest;
  ClassifierConfig config;
  std::variant<RandomForest, SvmModel, LogisticModel, KnnModel> params;
};

TrainedModel fit_classifier(const LabeledPoints& data,
                            const ClassifierConfig& config);

int predict_one(const TrainedModel& model, std::span<const double> x);
// Parallel over rows.
std::vector<int> predict(const TrainedModel& model, const Matrix& points);
namespace reference {
std::vector<int> predict(const TrainedModel& model, const Matrix& points);
}

void to_json(nlohmann::json& j, const ForestConfig& c);
void from_json(const nlohmann::json& j, ForestConfig& c);
void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);
nlohmann::json forest_to_json(const RandomForest& forest);
RandomForest forest_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace chirpmap::learners

#endif  // CHIRPMAP_LEARNERS_HPP
