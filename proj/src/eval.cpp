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

#include "chirpmap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/random.hpp"

namespace chirpmap::eval {

using ingest::ChirpRecord;
using ingest::Outcome;

std::string_view scenario_name(Scenario s) noexcept {
  switch (s) {
    case Scenario::kOutcome: return "s1";
    case Scenario::kDifficulty: return "s2";
    case Scenario::kOptimal: return "s3";
  }
  return "?";
}

std::string_view scenario_rule(Scenario s) noexcept {
  switch (s) {
    case Scenario::kOutcome: return "outcome == S";
    case Scenario::kDifficulty: return "difficulty in {3,4}";
    case Scenario::kOptimal: return "outcome == S and difficulty in {1,2}";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view name) noexcept {
  for (Scenario s : kAllScenarios) {
    if (scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

bool is_positive(Scenario s, const ChirpRecord& r) noexcept {
  switch (s) {
    case Scenario::kOutcome: return r.outcome == Outcome::kSuccess;
    case Scenario::kDifficulty: return r.difficulty >= 3;
    case Scenario::kOptimal:
      return r.outcome == Outcome::kSuccess && r.difficulty <= 2;
  }
  return false;
}

ScenarioLabels encode_scenario(const std::vector<ChirpRecord>& records,
                               Scenario scenario) {
  ScenarioLabels out;
  out.labels.reserve(records.size());
  for (const auto& r : records) {
    const int l = is_positive(scenario, r) ? 1 : 0;
    out.labels.push_back(l);
    (l ? out.positives : out.negatives)++;
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(std::span<const int> labels) {
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw UsageError(fmt::format("label {} at row {} is not binary", labels[i], i));
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

Folds stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("stratified_kfold: k must be >= 2");
  auto by_class = indices_by_class(labels);
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < kk) {
      throw DataError(fmt::format(
          "stratified_kfold: class {} has {} members, fewer than k={}", c,
          by_class[c].size(), k));
    }
  }
  Rng rng(seed);
  Folds folds(kk);
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % kk;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

HoldoutSplit holdout_split(std::span<const int> labels, double fraction,
                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw UsageError("holdout_split: fraction must lie in (0, 1)");
  }
  auto by_class = indices_by_class(labels);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 2) {
      throw DataError(fmt::format("holdout_split: class {} has fewer than 2 members", c));
    }
  }
  const double n = static_cast<double>(labels.size());
  const auto target = static_cast<std::size_t>(std::round(fraction * n));

  // Largest-remainder apportionment of the test rows.
  std::vector<std::size_t> take(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double exact = fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[c];
    remainders.push_back({exact - std::floor(exact), c});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t r = 0; assigned < target && r < remainders.size(); ++r) {
    const std::size_t c = remainders[r].second;
    if (take[c] < by_class[c].size()) {
      ++take[c];
      ++assigned;
    }
  }

  Rng rng(seed);
  HoldoutSplit split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    rng.shuffle(std::span<std::size_t>(members));
    split.test.insert(split.test.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(take[c]));
    split.train.insert(split.train.end(),
                       members.begin() + static_cast<std::ptrdiff_t>(take[c]),
                       members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw UsageError("confusion: length mismatch");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      (predicted[i] == 1 ? cm.tp : cm.fn)++;
    } else {
      (predicted[i] == 1 ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw UsageError("compute_metrics: empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
  m.precision = cm.tp + cm.fp == 0
                    ? 0.0
                    : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  m.recall = cm.tp + cm.fn == 0
                 ? 0.0
                 : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace {

learners::LabeledPoints take_rows(const Matrix& coords, std::span<const int> labels,
                                  const std::vector<std::size_t>& rows) {
  learners::LabeledPoints out{Matrix(rows.size(), coords.cols()), {}};
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(coords.row(rows[r]).begin(), coords.row(rows[r]).end(),
              out.coords.row(r).begin());
    out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

ConfusionMatrix fit_and_score(const Matrix& coords, std::span<const int> labels,
                              const std::vector<std::size_t>& train,
                              const std::vector<std::size_t>& test,
                              const learners::ClassifierConfig& config,
                              learners::TrainedModel* model_out = nullptr) {
  const auto train_set = take_rows(coords, labels, train);
  const auto test_set = take_rows(coords, labels, test);
  auto model = learners::fit_classifier(train_set, config);
  const auto predicted = learners::predict(model, test_set.coords);
  if (model_out) *model_out = std::move(model);
  return confusion(test_set.labels, predicted);
}

}  // namespace

CvResult cross_validate(const Matrix& coords, std::span<const int> labels,
                        const learners::ClassifierConfig& config, int k,
                        std::uint64_t seed) {
  if (coords.rows() != labels.size()) {
    throw UsageError("cross_validate: coordinates and labels are not aligned");
  }
  CvResult out;
  out.folds = stratified_kfold(labels, k, seed);
  for (std::size_t f = 0; f < out.folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < out.folds.size(); ++g) {
      if (g != f) train.insert(train.end(), out.folds[g].begin(), out.folds[g].end());
    }
    std::sort(train.begin(), train.end());
    const auto cm = fit_and_score(coords, labels, train, out.folds[f], config);
    out.fold_confusion.push_back(cm);
    out.fold_accuracy.push_back(compute_metrics(cm).accuracy);
  }
  const double kf = static_cast<double>(out.fold_accuracy.size());
  for (double a : out.fold_accuracy) out.accuracy_mean += a;
  out.accuracy_mean /= kf;
  double ss = 0.0;
  for (double a : out.fold_accuracy) ss += (a - out.accuracy_mean) * (a - out.accuracy_mean);
  out.accuracy_sd = std::sqrt(ss / kf);
  return out;
}

std::vector<learners::ClassifierConfig> EvalSettings::effective_classifiers() const {
  if (!classifiers.empty()) return classifiers;
  std::vector<learners::ClassifierConfig> all;
  for (auto kind : learners::kAllClassifiers) {
    learners::ClassifierConfig c;
    c.kind = kind;
    all.push_back(c);
  }
  return all;
}

std::uint64_t cv_seed(std::uint64_t seed, Scenario s) {
  return derive_seed(seed, fmt::format("cv/{}", scenario_name(s)));
}

std::uint64_t holdout_seed(std::uint64_t seed, Scenario s) {
  return derive_seed(seed, fmt::format("holdout/{}", scenario_name(s)));
}

EvalReport run_all_scenarios(const Matrix& coords,
                             const std::vector<ChirpRecord>& records,
                             const EvalSettings& settings) {
  if (coords.rows() != records.size()) {
    throw DataError(fmt::format(
        "run_all_scenarios: embedding has {} rows but there are {} records",
        coords.rows(), records.size()));
  }
  EvalReport report;
  report.settings = settings;
  const auto classifiers = settings.effective_classifiers();
  for (Scenario s : settings.scenarios) {
    const ScenarioLabels enc = encode_scenario(records, s);
    ScenarioResult sr;
    sr.scenario = s;
    sr.positives = enc.positives;
    sr.negatives = enc.negatives;
    sr.split = holdout_split(enc.labels, settings.holdout_fraction, holdout_seed(settings.seed, s));
    for (const auto& config : classifiers) {
      ClassifierResult cr;
      cr.config = config;
      cr.cv = cross_validate(coords, enc.labels, config, settings.folds,
                             cv_seed(settings.seed, s));
      cr.holdout_confusion = fit_and_score(coords, enc.labels, sr.split.train,
                                           sr.split.test, config, &cr.holdout_model);
      cr.holdout = compute_metrics(cr.holdout_confusion);
      sr.classifiers.push_back(std::move(cr));
    }
    report.scenarios.push_back(std::move(sr));
  }
  return report;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json scenarios = nlohmann::json::object();
  for (const auto& sr : report.scenarios) {
    nlohmann::json classifiers = nlohmann::json::object();
    for (const auto& cr : sr.classifiers) {
      nlohmann::json folds = nlohmann::json::array();
      for (const auto& cm : cr.cv.fold_confusion) folds.push_back(to_json(cm));
      classifiers[std::string(learners::kind_name(cr.config.kind))] = {
          {"config", cr.config},
          {"cv_accuracy_mean", cr.cv.accuracy_mean},
          {"cv_accuracy_sd", cr.cv.accuracy_sd},
          {"cv_fold_accuracy", cr.cv.fold_accuracy},
          {"cv_fold_confusion", folds},
          {"holdout",
           {{"accuracy", cr.holdout.accuracy},
            {"precision", cr.holdout.precision},
            {"recall", cr.holdout.recall},
            {"f1", cr.holdout.f1},
            {"confusion", to_json(cr.holdout_confusion)}}}};
    }
    const auto& first = sr.classifiers.empty() ? CvResult{} : sr.classifiers.front().cv;
    scenarios[std::string(scenario_name(sr.scenario))] = {
        {"positive_rule", scenario_rule(sr.scenario)},
        {"class_balance", {{"positive", sr.positives}, {"negative", sr.negatives}}},
        {"folds", first.folds},
        {"holdout_test_indices", sr.split.test},
        {"classifiers", classifiers}};
  }
  nlohmann::json scenario_names = nlohmann::json::array();
  for (Scenario s : report.settings.scenarios) scenario_names.push_back(scenario_name(s));
  return {{"scenarios", scenarios},
          {"settings",
           {{"folds", report.settings.folds},
            {"holdout_fraction", report.settings.holdout_fraction},
            {"seed", report.settings.seed},
            {"scenarios", scenario_names}}},
          {"conventions",
           {{"cv_accuracy_sd", "population standard deviation over folds"},
            {"precision_recall_f1", "computed on the stratified hold-out split"},
            {"positive_class", "the scenario's positive rule"},
            {"pipeline_order",
             "embedding computed on all rows before splitting; hold-out and "
             "fold scores are optimistic relative to a held-out embedding"}}}};
}

}  // namespace chirpmap::eval
