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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "chirpmap/error.hpp"
#include "chirpmap/explain.hpp"
#include "oracles.hpp"

namespace chirpmap::explain {
namespace {

using learners::DecisionTree;
using learners::TreeNode;
using learners::TreeTask;

TreeNode leaf(double value, double n) {
  TreeNode t;
  t.value = {value};
  t.n_samples = n;
  return t;
}

TreeNode split(int feature, double threshold, int left, int right, double n) {
  TreeNode t;
  t.feature = feature;
  t.threshold = threshold;
  t.left = left;
  t.right = right;
  t.n_samples = n;
  return t;
}

DecisionTree regression_tree(int d, std::vector<TreeNode> nodes) {
  DecisionTree t;
  t.task = TreeTask::kRegression;
  t.n_features = d;
  t.nodes = std::move(nodes);
  return t;
}

learners::RandomForest fitted_forest(const Matrix& x, std::span<const double> y, int trees,
                                     std::uint64_t seed) {
  learners::ForestConfig c;
  c.n_trees = trees;
  c.seed = seed;
  return learners::fit_forest(x, y, TreeTask::kRegression, c);
}

TEST(TreeShapley, DepthOneClosedForm) {
  const double a = 3.0, b = -1.5;
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    const auto tree = regression_tree(
        3, {split(0, 0.0, 1, 2, 100.0), leaf(a, 100.0 * p), leaf(b, 100.0 * (1 - p))});
    const std::vector<double> left{-1.0, 7.0, 2.0}, right{1.0, 7.0, 2.0};
    auto phi = tree_shapley(tree, left);
    EXPECT_NEAR(phi[0], (1 - p) * (a - b), 1e-14);
    EXPECT_EQ(phi[1], 0.0);
    EXPECT_EQ(phi[2], 0.0);
    phi = tree_shapley(tree, right);
    EXPECT_NEAR(phi[0], -p * (a - b), 1e-14);
  }
}

TEST(TreeShapley, SymmetricConjunction) {
  // f = 1 iff x0 > 0 and x1 > 0, with every branch holding half the rows.
  const auto tree = regression_tree(
      2, {split(0, 0.0, 1, 2, 4.0), leaf(0.0, 2.0), split(1, 0.0, 3, 4, 2.0), leaf(0.0, 1.0),
          leaf(1.0, 1.0)});
  const std::vector<double> x{1.0, 1.0};
  EXPECT_EQ(conditional_expectation(tree, x, 0u), 0.25);
  EXPECT_EQ(conditional_expectation(tree, x, 1u), 0.5);
  EXPECT_EQ(conditional_expectation(tree, x, 2u), 0.5);
  EXPECT_EQ(conditional_expectation(tree, x, 3u), 1.0);
  const auto phi = tree_shapley(tree, x);
  EXPECT_EQ(phi[0], phi[1]);
  EXPECT_DOUBLE_EQ(phi[0], 0.375);
}

TEST(TreeShapley, MatchesOrderingOracleOnFittedTrees) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t d = 3 + seed % 2;
    const Matrix x = oracle::normal_matrix(60, d, seed);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      y[i] = x(i, 0) * x(i, 1) + std::sin(x(i, d - 1)) + 0.1 * x(i, 2);
    }
    const auto tree = learners::fit_tree(x, y, TreeTask::kRegression, {}, seed);
    for (std::size_t i = 0; i < 60; i += 7) {
      const auto phi = tree_shapley(tree, x.row(i));
      const auto want = oracle::ordering_shapley(tree, x.row(i));
      for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(phi[j], want[j], 1e-12);
    }
  }
}

TEST(TreeShapley, ExtremesOfConditionalExpectation) {
  const Matrix x = oracle::normal_matrix(40, 3, 11);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = x(i, 0) - 2 * x(i, 2);
  const auto tree = learners::fit_tree(x, y, TreeTask::kRegression, {}, 1);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= 40.0;
  EXPECT_NEAR(conditional_expectation(tree, x.row(0), 0u), mean, 1e-12);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(conditional_expectation(tree, x.row(i), 7u), tree.predict_value(x.row(i)));
  }
}

TEST(ForestShapley, EfficiencyOnRandomInputs) {
  const Matrix x = oracle::normal_matrix(80, 3, 4);
  std::vector<double> y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = std::exp(x(i, 0)) + x(i, 1) * x(i, 2);
  const auto forest = fitted_forest(x, y, 30, 9);
  const Matrix probe = oracle::normal_matrix(200, 3, 5, 2.0);
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    const auto a = shapley_values(forest, probe.row(i));
    double sum = a.base;
    for (double v : a.phi) sum += v;
    EXPECT_NEAR(sum, forest.predict_value(probe.row(i)), 1e-9);
    EXPECT_EQ(a.prediction, forest.predict_value(probe.row(i)));
  }
}

TEST(ForestShapley, NullPlayerIsExactlyZero) {
  Matrix x = oracle::normal_matrix(50, 3, 6);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) {
    x(i, 1) = 4.0;  // constant, so never split on
    y[i] = x(i, 0) + x(i, 2);
  }
  const auto forest = fitted_forest(x, y, 20, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(shapley_values(forest, x.row(i)).phi[1], 0.0);
  }
}

TEST(ForestShapley, RejectsNonFiniteInput) {
  const Matrix x = oracle::normal_matrix(20, 2, 1);
  std::vector<double> y(20, 0.0);
  for (std::size_t i = 0; i < 20; ++i) y[i] = x(i, 0);
  const auto forest = fitted_forest(x, y, 3, 1);
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0};
  EXPECT_THROW(shapley_values(forest, bad), UsageError);
}

TEST(CoordinateRegressors, ConstantTargetAndIdentityTarget) {
  const Matrix f = oracle::normal_matrix(100, 3, 12);
  Matrix coords(100, 2);
  for (std::size_t i = 0; i < 100; ++i) {
    coords(i, 0) = f(i, 1);
    coords(i, 1) = 2.5;
  }
  learners::ForestConfig c;
  c.seed = 3;
  const auto reg = fit_coordinate_regressors(f, coords, c);
  EXPECT_TRUE(reg.constant_y);
  EXPECT_FALSE(reg.constant_x);
  EXPECT_EQ(reg.r2_y, 1.0);
  EXPECT_GE(reg.r2_x, 0.99);

  const auto map = build_sensitivity_map(reg, f, {}, {"a", "b", "c"});
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(map.phi_y(i, j), 0.0);
      EXPECT_EQ(map.combined(i, j), std::abs(map.phi_x(i, j)));
    }
  }
  // The coordinate is feature b, so b dominates the mean magnitude.
  const auto summary = sensitivity_summary(map);
  EXPECT_GT(summary[1].mean, summary[0].mean);
  EXPECT_GT(summary[1].mean, summary[2].mean);
}

TEST(CoordinateRegressors, InputValidation) {
  const Matrix f = oracle::normal_matrix(9, 3, 1);
  EXPECT_THROW(fit_coordinate_regressors(f, Matrix(9, 2), {}), DataError);
  EXPECT_THROW(fit_coordinate_regressors(oracle::normal_matrix(12, 3, 1), Matrix(11, 2), {}),
               DataError);
}

class SensitivityMapTest : public ::testing::Test {
 protected:
  void SetUp() override {
    features = oracle::normal_matrix(60, 3, 21);
    Matrix coords(60, 2);
    for (std::size_t i = 0; i < 60; ++i) {
      coords(i, 0) = 5 * features(i, 0) + 0.2 * features(i, 2);
      coords(i, 1) = -4 * features(i, 0) + 0.3 * features(i, 1);
    }
    learners::ForestConfig c;
    c.n_trees = 40;
    c.seed = 8;
    reg = fit_coordinate_regressors(features, coords, c);
    for (std::size_t i = 0; i < 60; ++i) ids.push_back("p" + std::to_string(i));
  }
  Matrix features;
  CoordinateRegressors reg;
  std::vector<std::string> ids;
};

TEST_F(SensitivityMapTest, CombineRecomputes) {
  for (auto rule : {CombineRule::kEuclidean, CombineRule::kManhattan}) {
    const auto map = build_sensitivity_map(reg, features, ids, {"a", "b", "c"}, rule);
    for (std::size_t i = 0; i < 60; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double px = map.phi_x(i, j), py = map.phi_y(i, j);
        const double want = rule == CombineRule::kEuclidean ? std::hypot(px, py)
                                                            : std::abs(px) + std::abs(py);
        EXPECT_NEAR(map.combined(i, j), want, 1e-12);
        EXPECT_GE(map.combined(i, j), 0.0);
      }
    }
  }
  EXPECT_EQ(combine(3.0, 4.0, CombineRule::kEuclidean), 5.0);
  EXPECT_EQ(combine(-3.0, 4.0, CombineRule::kManhattan), 7.0);
  EXPECT_EQ(combine(-2.0, 0.0, CombineRule::kEuclidean), 2.0);
}

TEST_F(SensitivityMapTest, DominantFeatureAndSummary) {
  const auto map = build_sensitivity_map(reg, features, ids, {"a", "b", "c"});
  const auto s = sensitivity_summary(map);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_GT(s[0].mean, s[1].mean);
  EXPECT_GT(s[0].mean, s[2].mean);
  for (const auto& fs : s) {
    ASSERT_EQ(fs.quantiles.size(), std::size(kSummaryLevels));
    EXPECT_LE(fs.min, fs.quantiles.front());
    for (std::size_t q = 1; q < fs.quantiles.size(); ++q) {
      EXPECT_LE(fs.quantiles[q - 1], fs.quantiles[q]);
    }
    EXPECT_LE(fs.quantiles.back(), fs.max);
  }
  const auto meta = sensitivity_metadata(map, reg);
  EXPECT_TRUE(meta.is_object());
}

TEST_F(SensitivityMapTest, CsvRoundTripAndDeterminism) {
  const auto map = build_sensitivity_map(reg, features, ids, {"a", "b", "c"});
  std::ostringstream out;
  write_sensitivity_csv(out, map);
  std::istringstream in(out.str());
  const auto back = read_sensitivity_csv(in);
  EXPECT_EQ(back.ids, map.ids);
  EXPECT_EQ(back.features, map.features);
  EXPECT_EQ(back.phi_x, map.phi_x);
  EXPECT_EQ(back.phi_y, map.phi_y);
  EXPECT_EQ(back.combined, map.combined);

  std::ostringstream again;
  write_sensitivity_csv(again, build_sensitivity_map(reg, features, ids, {"a", "b", "c"}));
  EXPECT_EQ(out.str(), again.str());
}

}  // namespace
}  // namespace chirpmap::explain
