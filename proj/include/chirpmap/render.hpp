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

#ifndef CHIRPMAP_RENDER_HPP
#define CHIRPMAP_RENDER_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chirpmap/eval.hpp"
#include "chirpmap/explain.hpp"
#include "chirpmap/ingest.hpp"
#include "chirpmap/learners.hpp"
#include "chirpmap/matrix.hpp"

namespace chirpmap::render {

// Named palette colours. The hex values are this project's choice.
inline constexpr std::string_view kTeal = "#008080";
inline constexpr std::string_view kMagenta = "#ff00ff";
inline constexpr std::string_view kCyan = "#00ffff";

// Binary classes: 0 -> teal, 1 -> magenta.
std::string_view class_color(int label) noexcept;
// Outcomes: S -> teal, NR -> magenta, F -> cyan.
std::string_view outcome_color(ingest::Outcome o) noexcept;

enum class PlotKind { kBars, kScatter, kBoundary, kConfusion, kSensitivity };

struct PlotSpec {
  PlotKind kind = PlotKind::kScatter;
  std::string title;
  std::string x_label = "t-SNE 1";
  std::string y_label = "t-SNE 2";
  int width = 640;
  int height = 520;
  int grid = 300;                    // boundary plots: cells per axis
  std::vector<std::string> class_names = {"class 0", "class 1"};
  std::string provenance;            // emitted as an XML comment if set
};

struct BoundingBox {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

// Bounding box of the points padded by `pad` of each span. A zero span on
// one axis borrows the other axis' span; throws DataError if all points
// coincide.
BoundingBox padded_bounds(const Matrix& coords, double pad = 0.05);

// Predictions at the centres of a uniform g x g grid. labels[iy * g + ix]
// belongs to (xs[ix], ys[iy]); ys ascend.
struct GridPrediction {
  BoundingBox box;
  int g = 0;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<int> labels;
};

GridPrediction predict_grid(const learners::TrainedModel& model,
                            const BoundingBox& box, int g);

std::string render_boundary(const learners::TrainedModel& model,
                            const learners::LabeledPoints& points,
                            const PlotSpec& spec);
std::string render_boundary(const GridPrediction& grid,
                            const learners::LabeledPoints& points,
                            const PlotSpec& spec);

// Min-max normalization; all zeros when the values are uniform.
std::vector<double> normalize_min_max(std::span<const double> values);

// Scatter coloured by the feature's combined magnitude through viridis,
// with a colour-scale legend. Circles carry data-id and data-norm.
std::string render_sensitivity(const Matrix& coords,
                               const explain::SensitivityMap& map,
                               std::size_t feature, const PlotSpec& spec);

struct Category {
  std::string name;
  std::string color;
};

// labels index into `categories`; categories with no points are left out
// of the legend.
std::string render_labeled_embedding(const Matrix& coords,
                                     std::span<const int> labels,
                                     const std::vector<Category>& categories,
                                     const PlotSpec& spec);

struct Bar {
  std::string name;
  double percent = 0.0;
  std::string color;
};

std::string render_bars(const std::vector<Bar>& bars, const PlotSpec& spec);
std::vector<Bar> outcome_bars(const ingest::ClassDistribution& d);
std::vector<Bar> difficulty_bars(const ingest::ClassDistribution& d);

struct NamedConfusion {
  std::string name;
  eval::ConfusionMatrix cm;
};

std::string render_confusion(const std::vector<NamedConfusion>& cms,
                             const PlotSpec& spec);

struct MetricRow {
  std::string classifier;
  double accuracy = 0.0;  // cross-validated mean
  double accuracy_sd = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

std::string render_metric_bars(const std::vector<MetricRow>& rows,
                               const PlotSpec& spec);

// Rows/confusions of one scenario as stored in the report JSON.
std::vector<MetricRow> metric_rows(const nlohmann::json& scenario);
std::vector<NamedConfusion> holdout_confusions(const nlohmann::json& scenario);

}  // namespace chirpmap::render

#endif  // CHIRPMAP_RENDER_HPP
