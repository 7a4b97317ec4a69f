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

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"

namespace chirpmap::learners {

std::string_view kind_name(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::kRandomForest: return "rf";
    case ClassifierKind::kSvm: return "svm";
    case ClassifierKind::kLogisticRegression: return "logreg";
    case ClassifierKind::kKnn: return "knn";
  }
  return "?";
}

std::optional<ClassifierKind> parse_kind(std::string_view name) noexcept {
  for (ClassifierKind k : kAllClassifiers) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

TrainedModel fit_classifier(const LabeledPoints& data,
                            const ClassifierConfig& config) {
  TrainedModel m{config.kind, config, RandomForest{}};
  switch (config.kind) {
    case ClassifierKind::kRandomForest:
      m.params = fit_random_forest(data, config.forest);
      break;
    case ClassifierKind::kSvm:
      m.params = fit_svm(data, config.svm);
      break;
    case ClassifierKind::kLogisticRegression:
      m.params = fit_logistic(data, config.logistic);
      break;
    case ClassifierKind::kKnn:
      m.params = fit_knn(data, config.knn);
      break;
  }
  return m;
}

int predict_one(const TrainedModel& model, std::span<const double> x) {
  return std::visit(
      [&](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RandomForest>) {
          return p.predict_class(x);
        } else {
          return p.predict(x);
        }
      },
      model.params);
}

std::vector<int> predict(const TrainedModel& model, const Matrix& points) {
  std::vector<int> out(points.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out[i] = predict_one(model, points.row(i));
  }
  return out;
}

namespace reference {
std::vector<int> predict(const TrainedModel& model, const Matrix& points) {
  std::vector<int> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out[i] = predict_one(model, points.row(i));
  }
  return out;
}
}  // namespace reference

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols) {
  std::vector<double> values;
  for (const auto& row : j) {
    if (row.size() != cols) throw DataError("model json: ragged matrix");
    for (const auto& v : row) values.push_back(v.get<double>());
  }
  return Matrix(j.size(), cols, std::move(values));
}

std::string_view kernel_name(KernelKind k) {
  return k == KernelKind::kLinear ? "linear" : "rbf";
}

KernelKind parse_kernel(const std::string& s) {
  if (s == "linear") return KernelKind::kLinear;
  if (s == "rbf") return KernelKind::kRbf;
  throw UsageError(fmt::format("svm: unknown kernel '{}'", s));
}

}  // namespace

void to_json(nlohmann::json& j, const ForestConfig& c) {
  j = {{"n_trees", c.n_trees},     {"max_depth", c.max_depth},
       {"min_samples_split", c.min_samples_split},
       {"max_features", c.max_features}, {"bootstrap", c.bootstrap},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ForestConfig& c) {
  const ForestConfig d;
  c.n_trees = j.value("n_trees", d.n_trees);
  c.max_depth = j.value("max_depth", d.max_depth);
  c.min_samples_split = j.value("min_samples_split", d.min_samples_split);
  c.max_features = j.value("max_features", d.max_features);
  c.bootstrap = j.value("bootstrap", d.bootstrap);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const ClassifierConfig& c) {
  j = {{"kind", kind_name(c.kind)}};
  switch (c.kind) {
    case ClassifierKind::kRandomForest:
      j["params"] = c.forest;
      break;
    case ClassifierKind::kSvm:
      j["params"] = {{"C", c.svm.C},
                     {"kernel", kernel_name(c.svm.kernel)},
                     {"gamma", c.svm.gamma},
                     {"tol", c.svm.tol},
                     {"max_iterations", c.svm.max_iterations}};
      break;
    case ClassifierKind::kLogisticRegression:
      j["params"] = {{"l2_lambda", c.logistic.l2_lambda},
                     {"max_iters", c.logistic.max_iters},
                     {"tol", c.logistic.tol}};
      break;
    case ClassifierKind::kKnn:
      j["params"] = {{"k", c.knn.k}};
      break;
  }
}

void from_json(const nlohmann::json& j, ClassifierConfig& c) {
  const std::string name = j.at("kind").get<std::string>();
  const auto kind = parse_kind(name);
  if (!kind) throw UsageError(fmt::format("unknown classifier '{}'", name));
  c.kind = *kind;
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  switch (c.kind) {
    case ClassifierKind::kRandomForest:
      c.forest = p.get<ForestConfig>();
      break;
    case ClassifierKind::kSvm: {
      const SvmConfig d;
      c.svm.C = p.value("C", d.C);
      c.svm.kernel = parse_kernel(p.value("kernel", std::string("rbf")));
      c.svm.gamma = p.value("gamma", d.gamma);
      c.svm.tol = p.value("tol", d.tol);
      c.svm.max_iterations = p.value("max_iterations", d.max_iterations);
      break;
    }
    case ClassifierKind::kLogisticRegression: {
      const LogisticConfig d;
      c.logistic.l2_lambda = p.value("l2_lambda", d.l2_lambda);
      c.logistic.max_iters = p.value("max_iters", d.max_iters);
      c.logistic.tol = p.value("tol", d.tol);
      break;
    }
    case ClassifierKind::kKnn:
      c.knn.k = p.value("k", KnnConfig{}.k);
      break;
  }
}

nlohmann::json forest_to_json(const RandomForest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : forest.trees) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   n = nlohmann::json::array(), value = nlohmann::json::array();
    for (const auto& node : t.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      n.push_back(node.n_samples);
      value.push_back(node.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold},
                     {"left", left}, {"right", right}, {"n_samples", n},
                     {"value", value}});
  }
  return {{"task", forest.task == TreeTask::kClassification ? "classification"
                                                            : "regression"},
          {"n_features", forest.n_features},
          {"n_classes", forest.n_classes},
          {"trees", trees}};
}

RandomForest forest_from_json(const nlohmann::json& j) {
  RandomForest f;
  f.task = j.at("task").get<std::string>() == "classification"
               ? TreeTask::kClassification
               : TreeTask::kRegression;
  f.n_features = j.at("n_features").get<int>();
  f.n_classes = j.at("n_classes").get<int>();
  for (const auto& jt : j.at("trees")) {
    DecisionTree t;
    t.task = f.task;
    t.n_features = f.n_features;
    t.n_classes = f.n_classes;
    const std::size_t count = jt.at("feature").size();
    t.nodes.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto& node = t.nodes[i];
      node.feature = jt["feature"][i].get<int>();
      node.threshold = jt["threshold"][i].get<double>();
      node.left = jt["left"][i].get<int>();
      node.right = jt["right"][i].get<int>();
      node.n_samples = jt["n_samples"][i].get<double>();
      node.value = jt["value"][i].get<std::vector<double>>();
      const auto limit = static_cast<int>(count);
      if (!node.is_leaf() && (node.left <= 0 || node.left >= limit ||
                              node.right <= 0 || node.right >= limit)) {
        throw DataError("forest json: child index out of range");
      }
    }
    if (t.nodes.empty()) throw DataError("forest json: empty tree");
    f.trees.push_back(std::move(t));
  }
  return f;
}

nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j = {{"kind", kind_name(model.kind)}, {"config", model.config}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RandomForest>) {
          j["parameters"] = forest_to_json(p);
        } else if constexpr (std::is_same_v<T, SvmModel>) {
          j["parameters"] = {{"kernel", kernel_name(p.kernel)},
                             {"gamma", p.gamma},
                             {"C", p.C},
                             {"bias", p.bias},
                             {"support_vectors", matrix_to_json(p.support_vectors)},
                             {"dual_coef", p.dual_coef},
                             {"dual_objective", p.dual_objective},
                             {"iterations", p.iterations},
                             {"converged", p.converged}};
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          j["parameters"] = {{"weights", p.weights},
                             {"bias", p.bias},
                             {"gradient_norm", p.gradient_norm},
                             {"iterations", p.iterations},
                             {"converged", p.converged}};
        } else {
          j["parameters"] = {{"k", p.k},
                             {"points", matrix_to_json(p.points)},
                             {"labels", p.labels}};
        }
      },
      model.params);
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel m;
  m.config = j.at("config").get<ClassifierConfig>();
  m.kind = m.config.kind;
  const auto& p = j.at("parameters");
  switch (m.kind) {
    case ClassifierKind::kRandomForest:
      m.params = forest_from_json(p);
      break;
    case ClassifierKind::kSvm: {
      SvmModel s;
      s.kernel = parse_kernel(p.at("kernel").get<std::string>());
      s.gamma = p.at("gamma").get<double>();
      s.C = p.at("C").get<double>();
      s.bias = p.at("bias").get<double>();
      s.dual_coef = p.at("dual_coef").get<std::vector<double>>();
      s.support_vectors = matrix_from_json(p.at("support_vectors"), 2);
      s.dual_objective = p.at("dual_objective").get<double>();
      s.iterations = p.at("iterations").get<long>();
      s.converged = p.at("converged").get<bool>();
      if (s.dual_coef.size() != s.support_vectors.rows())
        throw DataError("svm json: coefficient count mismatch");
      m.params = std::move(s);
      break;
    }
    case ClassifierKind::kLogisticRegression: {
      LogisticModel l;
      l.weights = p.at("weights").get<std::vector<double>>();
      l.bias = p.at("bias").get<double>();
      l.gradient_norm = p.at("gradient_norm").get<double>();
      l.iterations = p.at("iterations").get<int>();
      l.converged = p.at("converged").get<bool>();
      m.params = std::move(l);
      break;
    }
    case ClassifierKind::kKnn: {
      KnnModel k;
      k.k = p.at("k").get<int>();
      k.labels = p.at("labels").get<std::vector<int>>();
      k.points = matrix_from_json(p.at("points"), 2);
      if (k.labels.size() != k.points.rows())
        throw DataError("knn json: label count mismatch");
      m.params = std::move(k);
      break;
    }
  }
  return m;
}

}  // namespace chirpmap::learners
