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
#include <numeric>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"
#include "chirpmap/random.hpp"

namespace chirpmap::learners {

void validate(const LabeledPoints& data, bool require_both_classes) {
  if (data.coords.rows() != data.labels.size()) {
    throw UsageError("labeled points: coordinate and label counts differ");
  }
  if (data.coords.rows() == 0) throw UsageError("labeled points: no rows");
  bool seen[2] = {false, false};
  for (int l : data.labels) {
    if (l != 0 && l != 1) {
      throw UsageError(fmt::format("labeled points: label {} is not binary", l));
    }
    seen[l] = true;
  }
  if (require_both_classes && !(seen[0] && seen[1])) {
    throw UsageError("labeled points: both classes must be present");
  }
}

double gini_impurity(std::span<const double> counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(n > 0.0)) throw UsageError("gini_impurity: total count must be >= 1");
  double s = 0.0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold
            ? node->left
            : node->right)];
  }
  return *node;
}

int DecisionTree::predict_class(std::span<const double> x) const {
  const auto& v = leaf_for(x).value;
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double DecisionTree::predict_value(std::span<const double> x) const {
  return leaf_for(x).value.front();
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // weighted child impurity, lower is better
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, TreeTask task,
              const TreeConfig& config, std::uint64_t seed, int n_classes)
      : x_(x), y_(y), task_(task), config_(config), rng_(seed),
        n_classes_(n_classes) {
    tree_.task = task;
    tree_.n_features = static_cast<int>(x.cols());
    tree_.n_classes = task == TreeTask::kClassification ? n_classes : 0;
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::vector<double> node_value(const std::vector<std::size_t>& rows) const {
    if (task_ == TreeTask::kClassification) {
      std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
      for (std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
      return counts;
    }
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    return {sum / static_cast<double>(rows.size())};
  }

  bool is_pure(const std::vector<std::size_t>& rows) const {
    const double first = y_[rows.front()];
    return std::all_of(rows.begin(), rows.end(),
                       [&](std::size_t r) { return y_[r] == first; });
  }

  // Best threshold on one feature, or feature = -1 if the feature is
  // constant over the node.
  Split best_split_on(const std::vector<std::size_t>& rows, int feature) const {
    const auto f = static_cast<std::size_t>(feature);
    std::vector<std::size_t> order = rows;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = x_(a, f), vb = x_(b, f);
      return va < vb || (va == vb && a < b);
    });

    const std::size_t n = order.size();
    Split best;
    if (task_ == TreeTask::kClassification) {
      std::vector<double> total(static_cast<std::size_t>(n_classes_), 0.0);
      for (std::size_t r : order) total[static_cast<std::size_t>(y_[r])] += 1.0;
      std::vector<double> left(total.size(), 0.0);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left[static_cast<std::size_t>(y_[order[k]])] += 1.0;
        const double a = x_(order[k], f), b = x_(order[k + 1], f);
        if (a == b) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(n) - nl;
        double sl = 0.0, sr = 0.0;
        for (std::size_t c = 0; c < total.size(); ++c) {
          sl += left[c] * left[c];
          const double rc = total[c] - left[c];
          sr += rc * rc;
        }
        // n_l * gini_l + n_r * gini_r
        const double score = (nl - sl / nl) + (nr - sr / nr);
        if (best.feature < 0 || score < best.score) {
          best = {feature, midpoint(a, b), score};
        }
      }
    } else {
      double sum = 0.0, sumsq = 0.0;
      for (std::size_t r : order) {
        sum += y_[r];
        sumsq += y_[r] * y_[r];
      }
      double lsum = 0.0, lsq = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double v = y_[order[k]];
        lsum += v;
        lsq += v * v;
        const double a = x_(order[k], f), b = x_(order[k + 1], f);
        if (a == b) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(n) - nl;
        const double rsum = sum - lsum;
        const double score =
            (lsq - lsum * lsum / nl) + ((sumsq - lsq) - rsum * rsum / nr);
        if (best.feature < 0 || score < best.score) {
          best = {feature, midpoint(a, b), score};
        }
      }
    }
    return best;
  }

  static double midpoint(double a, double b) {
    const double t = a + 0.5 * (b - a);
    return t < b ? t : a;
  }

  Split find_split(const std::vector<std::size_t>& rows) {
    const int d = tree_.n_features;
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    int budget = d;
    if (config_.max_features > 0 && config_.max_features < d) {
      rng_.shuffle(std::span<int>(features));
      budget = config_.max_features;
    }
    Split best;
    int evaluated = 0;
    for (int f : features) {
      // Past the budget, keep drawing only until some valid split exists.
      if (evaluated >= budget && best.feature >= 0) break;
      const Split s = best_split_on(rows, f);
      ++evaluated;
      if (s.feature >= 0 && (best.feature < 0 || s.score < best.score)) best = s;
    }
    return best;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const auto id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.back().n_samples = static_cast<double>(rows.size());
    tree_.nodes.back().value = node_value(rows);

    const bool depth_reached = config_.max_depth > 0 && depth >= config_.max_depth;
    if (depth_reached ||
        rows.size() < static_cast<std::size_t>(std::max(2, config_.min_samples_split)) ||
        is_pure(rows)) {
      return id;
    }
    const Split split = find_split(rows);
    if (split.feature < 0) return id;

    const auto f = static_cast<std::size_t>(split.feature);
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(r, f) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const double> y_;
  TreeTask task_;
  TreeConfig config_;
  Rng rng_;
  int n_classes_;
  DecisionTree tree_;
};

int class_count(std::span<const double> y) {
  double hi = 0.0;
  for (double v : y) {
    if (v < 0.0 || v != std::floor(v)) {
      throw UsageError("fit_tree: classification targets must be class ids");
    }
    hi = std::max(hi, v);
  }
  return std::max(2, static_cast<int>(hi) + 1);
}

}  // namespace

DecisionTree fit_tree(const Matrix& x, std::span<const double> targets,
                      TreeTask task, const TreeConfig& config,
                      std::uint64_t seed, std::span<const std::size_t> rows) {
  if (x.rows() == 0 || x.rows() != targets.size()) {
    throw UsageError("fit_tree: need >= 1 row with aligned targets");
  }
  const int n_classes =
      task == TreeTask::kClassification ? class_count(targets) : 0;
  std::vector<std::size_t> idx;
  if (rows.empty()) {
    idx.resize(x.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    idx.assign(rows.begin(), rows.end());
  }
  return TreeBuilder(x, targets, task, config, seed, n_classes).build(std::move(idx));
}

int RandomForest::predict_class(std::span<const double> x) const {
  std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
  for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict_class(x))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                          votes.begin());
}

double RandomForest::predict_value(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict_value(x);
  return s / static_cast<double>(trees.size());
}

RandomForest fit_forest(const Matrix& x, std::span<const double> targets,
                        TreeTask task, const ForestConfig& config) {
  if (config.n_trees <= 0) throw UsageError("random forest: n_trees must be > 0");
  if (x.rows() == 0 || x.rows() != targets.size()) {
    throw UsageError("random forest: need >= 1 row with aligned targets");
  }
  RandomForest forest;
  forest.task = task;
  forest.n_features = static_cast<int>(x.cols());
  forest.n_classes = task == TreeTask::kClassification ? class_count(targets) : 0;

  TreeConfig tc;
  tc.max_depth = config.max_depth;
  tc.min_samples_split = config.min_samples_split;
  tc.max_features =
      config.max_features > 0
          ? config.max_features
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

  const std::size_t n = x.rows();
  const auto n_trees = static_cast<std::size_t>(config.n_trees);
  forest.trees.resize(n_trees);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(config.seed, t);
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      Rng rng(derive_seed(tree_seed, "bootstrap"));
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees[t] = fit_tree(x, targets, task, tc,
                               derive_seed(tree_seed, "features"), rows);
  }
  return forest;
}

RandomForest fit_random_forest(const LabeledPoints& data,
                               const ForestConfig& config) {
  validate(data, /*require_both_classes=*/false);
  std::vector<double> y(data.labels.begin(), data.labels.end());
  return fit_forest(data.coords, y, TreeTask::kClassification, config);
}

}  // namespace chirpmap::learners
