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

// End-to-end orchestration: configuration, stage runners that exchange
// artifacts through an output directory, and the synthetic data generator.

#ifndef CHIRPMAP_PIPELINE_HPP
#define CHIRPMAP_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chirpmap/embed.hpp"
#include "chirpmap/eval.hpp"
#include "chirpmap/explain.hpp"
#include "chirpmap/ingest.hpp"
#include "chirpmap/learners.hpp"

namespace chirpmap::pipeline {

enum class LabelModel { kCluster, kRandom };

struct SynthConfig {
  std::size_t n_per_cluster = 50;
  std::size_t n_clusters = 3;
  double separation = 10.0;  // distance between adjacent centers, in sd units
  LabelModel labels = LabelModel::kCluster;
};

enum class ExplainFeatures { kWeighted, kStandardized };

struct ExplainConfig {
  learners::ForestConfig forest;
  ExplainFeatures features = ExplainFeatures::kWeighted;
  explain::CombineRule combine = explain::CombineRule::kEuclidean;
};

struct RenderConfig {
  int grid = 300;
  int width = 640;
  int height = 520;
};

struct PipelineConfig {
  std::filesystem::path input;
  ingest::Schema schema;
  std::size_t subsample = 0;  // 0 keeps every valid row
  ingest::FeatureWeights weights;
  embed::TsneConfig tsne;
  std::vector<learners::ClassifierConfig> classifiers;  // empty: all four
  std::vector<eval::Scenario> scenarios{std::begin(eval::kAllScenarios),
                                        std::end(eval::kAllScenarios)};
  int folds = 5;
  double holdout_fraction = 0.3;
  ExplainConfig explain;
  RenderConfig render;
  SynthConfig synth;
  std::filesystem::path output_dir = "chirpmap_out";
  std::uint64_t seed = 0;

  void validate() const;
};

// Missing fields take their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_config(const std::filesystem::path& path);

// FNV-1a over the canonical JSON of everything except the output directory,
// so relocating a run does not change its identity.
std::string config_hash(const PipelineConfig& c);

// Stage seeds, each a function of the master seed and the stage name only.
std::uint64_t stage_seed(const PipelineConfig& c, std::string_view stage);

// Artifact names relative to the output directory.
namespace files {
inline constexpr const char* kSynth = "synth.csv";
inline constexpr const char* kRecords = "records.csv";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kRejections = "rejections.txt";
inline constexpr const char* kIngestMeta = "ingest.json";
inline constexpr const char* kEmbedding = "embedding.csv";
inline constexpr const char* kEmbeddingMeta = "embedding.json";
inline constexpr const char* kReport = "eval_report.json";
inline constexpr const char* kModels = "models";
inline constexpr const char* kSensitivity = "sensitivity.csv";
inline constexpr const char* kSensitivityMeta = "sensitivity.json";
inline constexpr const char* kFigures = "figures";
inline constexpr const char* kResolvedConfig = "config.resolved.json";
inline constexpr const char* kFailed = "FAILED";
}  // namespace files

std::vector<ingest::ChirpRecord> synthesize(const SynthConfig& config,
                                            std::uint64_t seed);

// Each stage reads what earlier stages wrote under output_dir and returns
// the paths it produced. `log` may be null.
std::vector<std::filesystem::path> cmd_synth(const PipelineConfig& c,
                                             std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_ingest(const PipelineConfig& c,
                                              std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_embed(const PipelineConfig& c,
                                             std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_eval(const PipelineConfig& c,
                                            std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_explain(const PipelineConfig& c,
                                               std::ostream* log = nullptr);
std::vector<std::filesystem::path> cmd_render(const PipelineConfig& c,
                                              std::ostream* log = nullptr);

// Runs ingest, embed, eval, explain and render in order. A failing stage
// leaves a FAILED marker naming it and rethrows with the stage prefixed.
std::vector<std::filesystem::path> cmd_pipeline(const PipelineConfig& c,
                                                std::ostream* log = nullptr);

// Every file the pipeline is expected to produce for `c`.
std::vector<std::filesystem::path> expected_artifacts(const PipelineConfig& c);

// features.csv round trip: id plus one column per feature.
void write_feature_csv(std::ostream& out, const ingest::FeatureMatrix& m);
ingest::FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace chirpmap::pipeline

#endif  // CHIRPMAP_PIPELINE_HPP
