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

#ifndef CHIRPMAP_EVAL_HPP
#define CHIRPMAP_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chirpmap/ingest.hpp"
#include "chirpmap/learners.hpp"
#include "chirpmap/matrix.hpp"

namespace chirpmap::eval {

// Binary clinical labelings.
//   kOutcome    (s1): positive iff outcome is S
//   kDifficulty (s2): positive iff difficulty is 3 or 4
//   kOptimal    (s3): positive iff outcome is S and difficulty is 1 or 2
enum class Scenario { kOutcome, kDifficulty, kOptimal };

inline constexpr Scenario kAllScenarios[] = {
    Scenario::kOutcome, Scenario::kDifficulty, Scenario::kOptimal};

std::string_view scenario_name(Scenario s) noexcept;  // s1, s2, s3
std::string_view scenario_rule(Scenario s) noexcept;
std::optional<Scenario> parse_scenario(std::string_view name) noexcept;
bool is_positive(Scenario s, const ingest::ChirpRecord& r) noexcept;

struct ScenarioLabels {
  std::vector<int> labels;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ScenarioLabels encode_scenario(const std::vector<ingest::ChirpRecord>& records,
                               Scenario scenario);

using Folds = std::vector<std::vector<std::size_t>>;

// Shuffles each class with the seed and deals its members round-robin,
// continuing the deal across classes. Folds come back sorted. Throws
// DataError when a class has fewer than k members.
Folds stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified split with round(fraction * N) test rows apportioned to the
// classes by largest remainder.
HoldoutSplit holdout_split(std::span<const int> labels, double fraction,
                           std::uint64_t seed);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> truth,
                          std::span<const int> predicted);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Empty denominators yield 0 rather than an error.
Metrics compute_metrics(const ConfusionMatrix& cm);

struct CvResult {
  std::vector<double> fold_accuracy;
  std::vector<ConfusionMatrix> fold_confusion;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;  // population sd over folds
  Folds folds;
};

CvResult cross_validate(const Matrix& coords, std::span<const int> labels,
                        const learners::ClassifierConfig& config, int k,
                        std::uint64_t seed);

struct EvalSettings {
  int folds = 5;
  double holdout_fraction = 0.3;
  std::uint64_t seed = 0;
  std::vector<Scenario> scenarios{std::begin(kAllScenarios),
                                  std::end(kAllScenarios)};
  std::vector<learners::ClassifierConfig> classifiers;  // empty: all four

  std::vector<learners::ClassifierConfig> effective_classifiers() const;
};

struct ClassifierResult {
  learners::ClassifierConfig config;
  CvResult cv;
  ConfusionMatrix holdout_confusion;
  Metrics holdout;
  learners::TrainedModel holdout_model;  // fitted on the hold-out train part
};

struct ScenarioResult {
  Scenario scenario = Scenario::kOutcome;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  HoldoutSplit split;
  std::vector<ClassifierResult> classifiers;
};

struct EvalReport {
  EvalSettings settings;
  std::vector<ScenarioResult> scenarios;
};

std::uint64_t cv_seed(std::uint64_t seed, Scenario s);
std::uint64_t holdout_seed(std::uint64_t seed, Scenario s);

EvalReport run_all_scenarios(const Matrix& coords,
                             const std::vector<ingest::ChirpRecord>& records,
                             const EvalSettings& settings);

// scenario -> classifier -> {cv_accuracy_mean, cv_accuracy_sd, holdout}.
nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json to_json(const ConfusionMatrix& cm);

}  // namespace chirpmap::eval

#endif  // CHIRPMAP_EVAL_HPP
