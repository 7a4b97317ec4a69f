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

#include <gtest/gtest.h>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"
#include "oracles.hpp"

namespace chirpmap::learners {
namespace {

double accuracy(const TrainedModel& m, const LabeledPoints& data) {
  const auto pred = predict(m, data.coords);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == data.labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

ClassifierConfig config_for(ClassifierKind kind) {
  ClassifierConfig c;
  c.kind = kind;
  c.forest.seed = 17;
  return c;
}

// Largest KKT violation m(a) - M(a) of an SVM dual point, recomputed from
// the kernel matrix.
TEST(Gini, ClosedForms) {
  const double pure[] = {4, 0}, even[] = {2, 2}, skew[] = {1, 3};
  EXPECT_EQ(gini_impurity(pure), 0.0);
  EXPECT_DOUBLE_EQ(gini_impurity(even), 0.5);
  EXPECT_DOUBLE_EQ(gini_impurity(skew), 0.375);
  for (int a = 0; a <= 20; ++a) {
    const double c[] = {static_cast<double>(a), static_cast<double>(20 - a)};
    const double g = gini_impurity(c);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 0.5);
    EXPECT_EQ(g == 0.0, a == 0 || a == 20);
  }
}

TEST(Tree, SeparableDataNeedsOneSplit) {
  Matrix x(6, 2, std::vector<double>{-3, 1, -2, -1, -1, 4, 1, 0, 2, 2, 3, -5});
  const std::vector<double> y = {0, 0, 0, 1, 1, 1};
  const auto tree = fit_tree(x, y, TreeTask::kClassification, {}, 1);
  EXPECT_EQ(tree.depth(), 1);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 0.0);  // midpoint of -1 and 1
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(tree.predict_class(x.row(i)), y[i]);
}

TEST(Tree, IdenticalRowsGiveMajorityLeaf) {
  const Matrix x(5, 2, 1.0);
  const std::vector<double> y = {1, 0, 1, 1, 0};
  const auto tree = fit_tree(x, y, TreeTask::kClassification, {}, 1);
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_EQ(tree.predict_class(x.row(0)), 1);
}

TEST(Tree, SingleRowIsOneLeaf) {
  const Matrix x(1, 2, std::vector<double>{0.3, 0.4});
  const std::vector<double> y = {1};
  const auto tree = fit_tree(x, y, TreeTask::kClassification, {}, 1);
  EXPECT_EQ(tree.nodes.size(), 1u);
  EXPECT_EQ(tree.predict_class(x.row(0)), 1);
}

TEST(Tree, LeafCountsSumToRoutedRows) {
  const auto b = oracle::two_blob(4, 200).train;
  std::vector<double> y(b.labels.begin(), b.labels.end());
  TreeConfig cfg;
  cfg.max_depth = 4;
  const auto tree = fit_tree(b.coords, y, TreeTask::kClassification, cfg, 1);
  EXPECT_LE(tree.depth(), 4);
  for (const auto& node : tree.nodes) {
    double s = 0.0;
    for (double v : node.value) s += v;
    EXPECT_DOUBLE_EQ(s, node.n_samples);
    if (!node.is_leaf()) {
      EXPECT_TRUE(std::isfinite(node.threshold));
      EXPECT_DOUBLE_EQ(tree.nodes[node.left].n_samples + tree.nodes[node.right].n_samples,
                       node.n_samples);
    }
  }
}

TEST(Tree, TrainingAccuracyOnBlobs) {
  const auto b = oracle::two_blob(5, 200, 10, 3.0).train;
  std::vector<double> y(b.labels.begin(), b.labels.end());
  const auto tree = fit_tree(b.coords, y, TreeTask::kClassification, {}, 1);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < 200; ++i) ok += tree.predict_class(b.coords.row(i)) == b.labels[i];
  EXPECT_GE(ok, 198u);
}

TEST(Forest, SingleRowPredictsItsLabelEverywhere) {
  LabeledPoints one{Matrix(1, 2, std::vector<double>{1, 2}), {1}};
  ForestConfig cfg;
  cfg.n_trees = 1;
  const auto f = fit_random_forest(one, cfg);
  const auto grid = oracle::normal_matrix(50, 2, 1, 100.0);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(f.predict_class(grid.row(i)), 1);
}

TEST(Forest, DeterministicAndThreadIndependent) {
  const auto b = oracle::two_blob(6).train;
  ForestConfig cfg;
  cfg.seed = 99;
  cfg.n_trees = 25;
  const auto a = fit_random_forest(b, cfg);
  const auto c = fit_random_forest(b, cfg);
  EXPECT_EQ(forest_to_json(a), forest_to_json(c));
  cfg.seed = 100;
  EXPECT_NE(forest_to_json(a), forest_to_json(fit_random_forest(b, cfg)));
}

TEST(Forest, VoteTieGoesToClassZero) {
  // Two stumps that disagree everywhere.
  RandomForest f;
  f.n_features = 1;
  f.n_classes = 2;
  for (int c = 0; c < 2; ++c) {
    DecisionTree t;
    t.n_features = 1;
    t.n_classes = 2;
    TreeNode leaf;
    leaf.n_samples = 1;
    leaf.value = {c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0};
    t.nodes.push_back(leaf);
    f.trees.push_back(t);
  }
  const double x[] = {0.0};
  EXPECT_EQ(f.predict_class(x), 0);
}

TEST(Svm, TwoPointsLinearBisector) {
  LabeledPoints d{Matrix(2, 2, std::vector<double>{1, 1, 3, 5}), {0, 1}};
  SvmConfig cfg;
  cfg.kernel = KernelKind::kLinear;
  cfg.C = 100.0;
  const auto m = fit_svm(d, cfg);
  EXPECT_TRUE(m.converged);
  EXPECT_EQ(m.support_vectors.rows(), 2u);
  const double mid[] = {2, 3};
  EXPECT_NEAR(m.decision(mid), 0.0, 1e-6);
  const double a[] = {1, 1}, b[] = {3, 5};
  EXPECT_NEAR(m.decision(a), -1.0, 1e-6);
  EXPECT_NEAR(m.decision(b), 1.0, 1e-6);
  // Points on the bisector through the midpoint, perpendicular to (2, 4).
  const double along[] = {2 + 4, 3 - 2};
  EXPECT_NEAR(m.decision(along), 0.0, 1e-6);
}

TEST(Svm, ConflictingDuplicateHitsBound) {
  LabeledPoints d{Matrix(3, 2, std::vector<double>{0, 0, 0, 0, 4, 4}), {0, 1, 1}};
  SvmConfig cfg;
  cfg.C = 0.5;
  const auto m = fit_svm(d, cfg);
  EXPECT_TRUE(std::abs(m.alpha[0] - cfg.C) < 1e-12 || std::abs(m.alpha[1] - cfg.C) < 1e-12);
}

TEST(Svm, MatchesQpOracleAndKkt) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto b = oracle::gaussian_blobs({{-1, 0}, {1, 0}}, 10, 1.0, seed);
    LabeledPoints d{b.x, b.labels};
    SvmConfig cfg;
    const auto m = fit_svm(d, cfg);
    ASSERT_TRUE(m.converged);
    const auto qp = oracle::svm_dual_qp(d.coords, d.labels, cfg.C, m.gamma, true);
    EXPECT_NEAR(m.dual_objective, qp.objective, 1e-3) << "seed " << seed;
    double balance = 0.0;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
      EXPECT_GE(m.alpha[i], 0.0);
      EXPECT_LE(m.alpha[i], cfg.C);
      balance += (d.labels[i] == 1 ? 1.0 : -1.0) * m.alpha[i];
    }
    EXPECT_NEAR(balance, 0.0, cfg.tol);
    EXPECT_LT(oracle::kkt_gap(d, m), cfg.tol);
  }
}

TEST(Logistic, MirrorSymmetricDataHasZeroBias) {
  Matrix x(40, 2);
  std::vector<int> y(40);
  Rng rng(3);
  for (std::size_t i = 0; i < 20; ++i) {
    const double a = 1.0 + rng.normal(), b = rng.normal();
    x(i, 0) = a;
    x(i, 1) = b;
    x(i + 20, 0) = -a;
    x(i + 20, 1) = -b;
    y[i] = 1;
    y[i + 20] = 0;
  }
  const auto m = fit_logistic({x, y}, {});
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(m.bias, 0.0, 1e-6);
  const double origin[] = {0, 0};
  EXPECT_NEAR(m.probability(origin), 0.5, 1e-6);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  const auto b = oracle::two_blob(8, 60, 10, 2.0).train;
  const double lambda = 1e-2;
  Rng rng(4);
  auto check = [&](std::vector<double> w, double bias, double abs_floor) {
    const auto g = penalized_gradient(b, w, bias, lambda);
    for (std::size_t k = 0; k < 3; ++k) {
      const double h = 1e-5;
      auto shifted = [&](double s) {
        std::vector<double> ww = w;
        double bb = bias;
        (k < 2 ? ww[k] : bb) += s;
        return penalized_log_likelihood(b, ww, bb, lambda);
      };
      const double fd = (shifted(h) - shifted(-h)) / (2 * h);
      EXPECT_LT(std::abs(g[k] - fd) / std::max(std::abs(fd), abs_floor), 1e-5);
    }
  };
  for (int t = 0; t < 10; ++t) check({rng.normal(), rng.normal()}, rng.normal(), 1e-3);
  LogisticConfig cfg;
  cfg.l2_lambda = lambda;
  const auto m = fit_logistic(b, cfg);
  ASSERT_TRUE(m.converged);
  EXPECT_LT(m.gradient_norm, cfg.tol);
  // At the optimum the gradient is ~0, so compare absolutely.
  check(m.weights, m.bias, 1.0);
}

TEST(Logistic, RestartsAgree) {
  const auto b = oracle::two_blob(9, 80, 10, 2.0).train;
  const auto m1 = fit_logistic(b, {});
  auto shuffled = b;
  std::vector<std::size_t> order(80);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng(1).shuffle(std::span<std::size_t>(order));
  for (std::size_t i = 0; i < 80; ++i) {
    shuffled.coords(i, 0) = b.coords(order[i], 0);
    shuffled.coords(i, 1) = b.coords(order[i], 1);
    shuffled.labels[i] = b.labels[order[i]];
  }
  const auto m2 = fit_logistic(shuffled, {});
  EXPECT_NEAR(m1.bias, m2.bias, 1e-4);
  EXPECT_NEAR(m1.weights[0], m2.weights[0], 1e-4);
}

TEST(Knn, IdentityAndGlobalMajority) {
  const auto b = oracle::two_blob(10, 60).train;
  const auto k1 = fit_knn(b, {1});
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(k1.predict(b.coords.row(i)), b.labels[i]);

  LabeledPoints skew{oracle::normal_matrix(11, 2, 3), {1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0}};
  const auto all = fit_knn(skew, {11});
  const auto q = oracle::normal_matrix(30, 2, 4, 10.0);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(all.predict(q.row(i)), 1);
  EXPECT_THROW(fit_knn(skew, {12}), UsageError);
}

TEST(Knn, MatchesExhaustiveSearch) {
  LabeledPoints d{oracle::normal_matrix(100, 2, 12), {}};
  Rng rng(12);
  for (std::size_t i = 0; i < 100; ++i) d.labels.push_back(static_cast<int>(rng.below(2)));
  for (int k : {1, 4, 5, 6}) {
    const auto m = fit_knn(d, {k});
    const auto q = oracle::normal_matrix(50, 2, 13);
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_EQ(m.predict(q.row(i)),
                oracle::knn_vote(d.coords, d.labels, static_cast<std::size_t>(k), q.row(i)));
    }
  }
}

TEST(Knn, DistanceTiesPreferLowerIndex) {
  // Four points at distance 1 from the origin; labels alternate.
  LabeledPoints d{Matrix(4, 2, std::vector<double>{1, 0, 0, 1, -1, 0, 0, -1}), {1, 0, 0, 1}};
  const auto m = fit_knn(d, {1});
  const double origin[] = {0, 0};
  EXPECT_EQ(m.neighbors(origin), std::vector<std::size_t>{0});
  EXPECT_EQ(m.predict(origin), 1);
  // k = 2 votes 1:1, broken by the nearest (index 0, label 1).
  EXPECT_EQ(fit_knn(d, {2}).predict(origin), 1);
}

TEST(AllClassifiers, TwoBlobHoldout) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto tb = oracle::two_blob(seed);
    for (auto kind : kAllClassifiers) {
      const auto m = fit_classifier(tb.train, config_for(kind));
      EXPECT_GE(accuracy(m, tb.test), 0.95) << kind_name(kind) << " seed " << seed;
    }
  }
}

TEST(AllClassifiers, ParallelPredictMatchesReferenceAndJsonRoundTrip) {
  const auto tb = oracle::two_blob(21);
  const auto grid = oracle::normal_matrix(500, 2, 22, 4.0);
  for (auto kind : kAllClassifiers) {
    const auto m = fit_classifier(tb.train, config_for(kind));
    const auto pred = predict(m, grid);
    EXPECT_EQ(pred, reference::predict(m, grid)) << kind_name(kind);
    const auto back = model_from_json(model_to_json(m));
    EXPECT_EQ(predict(back, grid), pred) << kind_name(kind);
    EXPECT_EQ(model_to_json(back), model_to_json(m)) << kind_name(kind);
  }
}

TEST(AllClassifiers, RequireBinaryLabels) {
  LabeledPoints bad{oracle::normal_matrix(4, 2, 1), {0, 1, 2, 0}};
  for (auto kind : kAllClassifiers) {
    EXPECT_THROW(fit_classifier(bad, config_for(kind)), UsageError);
  }
  LabeledPoints one_class{oracle::normal_matrix(4, 2, 1), {1, 1, 1, 1}};
  EXPECT_THROW(fit_svm(one_class, {}), UsageError);
  EXPECT_THROW(fit_logistic(one_class, {}), UsageError);
}

}  // namespace
}  // namespace chirpmap::learners
