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

#include "chirpmap/render.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/viridis.hpp"
#include "svg.hpp"

namespace chirpmap::render {

using detail::Frame;
using detail::SvgDocument;

std::string_view class_color(int label) noexcept {
  return label == 1 ? kMagenta : kTeal;
}

std::string_view outcome_color(ingest::Outcome o) noexcept {
  switch (o) {
    case ingest::Outcome::kSuccess: return kTeal;
    case ingest::Outcome::kNoResection: return kMagenta;
    case ingest::Outcome::kFailure: return kCyan;
  }
  return kTeal;
}

BoundingBox padded_bounds(const Matrix& coords, double pad) {
  if (coords.rows() == 0) throw DataError("bounding box of an empty point set");
  BoundingBox b{coords(0, 0), coords(0, 0), coords(0, 1), coords(0, 1)};
  for (std::size_t i = 1; i < coords.rows(); ++i) {
    b.x_min = std::min(b.x_min, coords(i, 0));
    b.x_max = std::max(b.x_max, coords(i, 0));
    b.y_min = std::min(b.y_min, coords(i, 1));
    b.y_max = std::max(b.y_max, coords(i, 1));
  }
  double wx = b.x_max - b.x_min, wy = b.y_max - b.y_min;
  if (!(wx > 0.0) && !(wy > 0.0)) {
    throw DataError("degenerate bounding box: all points are identical");
  }
  if (!(wx > 0.0)) wx = wy;
  if (!(wy > 0.0)) wy = wx;
  const double cx = 0.5 * (b.x_min + b.x_max), cy = 0.5 * (b.y_min + b.y_max);
  const double hx = 0.5 * wx * (1.0 + 2.0 * pad), hy = 0.5 * wy * (1.0 + 2.0 * pad);
  return {cx - hx, cx + hx, cy - hy, cy + hy};
}

GridPrediction predict_grid(const learners::TrainedModel& model,
                            const BoundingBox& box, int g) {
  if (g < 1) throw UsageError("predict_grid: grid size must be >= 1");
  GridPrediction out;
  out.box = box;
  out.g = g;
  const auto n = static_cast<std::size_t>(g);
  const double dx = (box.x_max - box.x_min) / g, dy = (box.y_max - box.y_min) / g;
  for (std::size_t k = 0; k < n; ++k) {
    out.xs.push_back(box.x_min + (static_cast<double>(k) + 0.5) * dx);
    out.ys.push_back(box.y_min + (static_cast<double>(k) + 0.5) * dy);
  }
  Matrix centers(n * n, 2);
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      centers(iy * n + ix, 0) = out.xs[ix];
      centers(iy * n + ix, 1) = out.ys[iy];
    }
  }
  out.labels = learners::predict(model, centers);
  return out;
}

namespace {

constexpr double kLegendWidth = 150.0;

Frame make_frame(const PlotSpec& spec, const BoundingBox& box, double right_extra) {
  const double left = 70.0, top = 40.0, bottom = 55.0, right = 20.0 + right_extra;
  return Frame{left, top, spec.width - left - right, spec.height - top - bottom,
               box.x_min, box.x_max, box.y_min, box.y_max};
}

void legend_entry(SvgDocument& doc, double x, double y, std::string_view color,
                  std::string_view label) {
  doc.circle(x + 6, y - 4, 5, color, "stroke=\"#333333\" stroke-width=\"0.5\"");
  doc.text(x + 16, y, label, 12, "start");
}

}  // namespace

std::string render_boundary(const learners::TrainedModel& model,
                            const learners::LabeledPoints& points,
                            const PlotSpec& spec) {
  const BoundingBox box = padded_bounds(points.coords);
  return render_boundary(predict_grid(model, box, spec.grid), points, spec);
}

std::string render_boundary(const GridPrediction& grid,
                            const learners::LabeledPoints& points,
                            const PlotSpec& spec) {
  if (points.coords.rows() == 0) throw DataError("render_boundary: no points");
  SvgDocument doc(spec.width, spec.height, spec.provenance);
  const Frame f = make_frame(spec, grid.box, kLegendWidth);
  const auto g = static_cast<std::size_t>(grid.g);
  const double cw = f.width / grid.g, ch = f.height / grid.g;

  doc.raw("<g class=\"mesh\" shape-rendering=\"crispEdges\" fill-opacity=\"0.35\">\n");
  for (std::size_t iy = 0; iy < g; ++iy) {
    const double y = f.top + f.height - static_cast<double>(iy + 1) * ch;
    std::size_t run = 0;
    for (std::size_t ix = 1; ix <= g; ++ix) {
      if (ix < g && grid.labels[iy * g + ix] == grid.labels[iy * g + run]) continue;
      const int label = grid.labels[iy * g + run];
      doc.rect(f.left + static_cast<double>(run) * cw, y,
               static_cast<double>(ix - run) * cw, ch, class_color(label));
      run = ix;
    }
  }
  doc.raw("</g>\n");

  bool present[2] = {false, false};
  doc.raw("<g class=\"points\" stroke=\"#222222\" stroke-width=\"0.4\">\n");
  for (std::size_t i = 0; i < points.coords.rows(); ++i) {
    const int label = points.labels[i];
    present[label == 1] = true;
    doc.circle(f.px(points.coords(i, 0)), f.py(points.coords(i, 1)), 2.6,
               class_color(label));
  }
  doc.raw("</g>\n");

  detail::draw_axes(doc, f, spec.title, spec.x_label, spec.y_label);
  double ly = f.top + 16;
  for (int c = 0; c < 2; ++c) {
    if (!present[c]) continue;
    const std::string name = static_cast<std::size_t>(c) < spec.class_names.size()
                                 ? spec.class_names[static_cast<std::size_t>(c)]
                                 : fmt::format("class {}", c);
    legend_entry(doc, f.left + f.width + 16, ly, class_color(c), name);
    ly += 20;
  }
  return doc.finish();
}

std::vector<double> normalize_min_max(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = values[i] == *hi ? 1.0 : (values[i] - *lo) / span;
  }
  return out;
}

std::string render_sensitivity(const Matrix& coords,
                               const explain::SensitivityMap& map,
                               std::size_t feature, const PlotSpec& spec) {
  const std::size_t n = coords.rows();
  if (n == 0 || map.combined.rows() != n) {
    throw DataError("render_sensitivity: embedding and map are not aligned");
  }
  if (feature >= map.combined.cols()) {
    throw UsageError("render_sensitivity: feature index out of range");
  }
  std::vector<double> magnitude(n);
  for (std::size_t i = 0; i < n; ++i) magnitude[i] = map.combined(i, feature);
  const auto norm = normalize_min_max(magnitude);
  const auto [lo, hi] = std::minmax_element(magnitude.begin(), magnitude.end());

  SvgDocument doc(spec.width, spec.height, spec.provenance);
  const Frame f = make_frame(spec, padded_bounds(coords), kLegendWidth);

  // Low magnitudes first so the strongest points stay visible.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norm[a] < norm[b]; });
  doc.raw("<g class=\"points\">\n");
  for (std::size_t i : order) {
    const std::string id = i < map.ids.size() ? map.ids[i] : std::to_string(i);
    doc.circle(f.px(coords(i, 0)), f.py(coords(i, 1)), 3.2, viridis_hex(norm[i]),
               fmt::format("data-id=\"{}\" data-norm=\"{:.6f}\"",
                           detail::xml_escape(id), norm[i]));
  }
  doc.raw("</g>\n");

  const double bx = f.left + f.width + 30, by = f.top + 10, bw = 18,
               bh = std::max(60.0, f.height - 40);
  std::string stops;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    stops += fmt::format("<stop offset=\"{:.1f}\" stop-color=\"{}\"/>", t, viridis_hex(t));
  }
  doc.raw(fmt::format(
      "<defs><linearGradient id=\"viridis-scale\" x1=\"0\" y1=\"1\" x2=\"0\" "
      "y2=\"0\">{}</linearGradient></defs>\n",
      stops));
  doc.rect(bx, by, bw, bh, "url(#viridis-scale)", "stroke=\"#333333\" stroke-width=\"0.5\"");
  doc.text(bx + bw + 6, by + 10, fmt::format("{:.3g}", *hi), 11, "start");
  doc.text(bx + bw + 6, by + bh, fmt::format("{:.3g}", *lo), 11, "start");
  doc.text(bx + bw / 2, by + bh + 18, "|SHAP|", 11);

  detail::draw_axes(doc, f, spec.title, spec.x_label, spec.y_label);
  return doc.finish();
}

std::string render_labeled_embedding(const Matrix& coords,
                                     std::span<const int> labels,
                                     const std::vector<Category>& categories,
                                     const PlotSpec& spec) {
  if (coords.rows() == 0 || labels.size() != coords.rows()) {
    throw DataError("render_labeled_embedding: labels and points are not aligned");
  }
  std::vector<bool> present(categories.size(), false);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= categories.size()) {
      throw UsageError(fmt::format("render_labeled_embedding: no category for label {}", l));
    }
    present[static_cast<std::size_t>(l)] = true;
  }
  SvgDocument doc(spec.width, spec.height, spec.provenance);
  const Frame f = make_frame(spec, padded_bounds(coords), kLegendWidth);
  doc.raw("<g class=\"points\" stroke=\"#222222\" stroke-width=\"0.3\" fill-opacity=\"0.85\">\n");
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    doc.circle(f.px(coords(i, 0)), f.py(coords(i, 1)), 2.8,
               categories[static_cast<std::size_t>(labels[i])].color);
  }
  doc.raw("</g>\n");
  detail::draw_axes(doc, f, spec.title, spec.x_label, spec.y_label);
  double ly = f.top + 16;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    if (!present[c]) continue;
    legend_entry(doc, f.left + f.width + 16, ly, categories[c].color, categories[c].name);
    ly += 20;
  }
  return doc.finish();
}

std::string render_bars(const std::vector<Bar>& bars, const PlotSpec& spec) {
  if (bars.empty()) throw DataError("render_bars: no bars");
  double top_value = 0.0;
  for (const auto& b : bars) top_value = std::max(top_value, b.percent);
  top_value = top_value > 0.0 ? top_value * 1.15 : 1.0;
  SvgDocument doc(spec.width, spec.height, spec.provenance);
  const Frame f = make_frame(spec, {0.0, static_cast<double>(bars.size()), 0.0, top_value}, 0.0);
  const double slot = f.width / static_cast<double>(bars.size());
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double x0 = f.left + slot * (static_cast<double>(k) + 0.15);
    const double y = f.py(bars[k].percent);
    doc.rect(x0, y, slot * 0.7, f.top + f.height - y, bars[k].color,
             "stroke=\"#333333\" stroke-width=\"0.5\"");
    doc.text(x0 + slot * 0.35, y - 6, fmt::format("{:.1f}%", bars[k].percent), 12);
    doc.text(x0 + slot * 0.35, f.top + f.height + 18, bars[k].name, 12);
  }
  detail::draw_axes(doc, f, spec.title, spec.x_label, spec.y_label, false);
  return doc.finish();
}

std::vector<Bar> outcome_bars(const ingest::ClassDistribution& d) {
  std::vector<Bar> bars;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto o = static_cast<ingest::Outcome>(k);
    bars.push_back({std::string(ingest::outcome_code(o)), 100.0 * d.outcome[k],
                    std::string(outcome_color(o))});
  }
  return bars;
}

std::vector<Bar> difficulty_bars(const ingest::ClassDistribution& d) {
  std::vector<Bar> bars;
  for (std::size_t k = 0; k < 4; ++k) {
    bars.push_back({fmt::format("Level {}", k + 1), 100.0 * d.difficulty[k],
                    viridis_hex(static_cast<double>(k) / 3.0)});
  }
  return bars;
}

std::string render_confusion(const std::vector<NamedConfusion>& cms,
                             const PlotSpec& spec) {
  if (cms.empty()) throw DataError("render_confusion: no matrices");
  const double margin = 40.0, top = 60.0;
  const double panel = (spec.width - margin * (static_cast<double>(cms.size()) + 1)) /
                       static_cast<double>(cms.size());
  const double cell = std::min(panel, static_cast<double>(spec.height) - top - 70.0) / 2.0;
  const int height = std::min(spec.height, static_cast<int>(std::ceil(top + 2 * cell + 40)));
  SvgDocument doc(spec.width, height, spec.provenance);
  doc.text(spec.width / 2.0, 28, spec.title, 15, "middle", "font-weight=\"bold\"");
  for (std::size_t k = 0; k < cms.size(); ++k) {
    const auto& cm = cms[k].cm;
    const double x0 = margin + static_cast<double>(k) * (panel + margin) + (panel - 2 * cell) / 2;
    // Rows: actual 0/1; columns: predicted 0/1.
    const std::size_t counts[2][2] = {{cm.tn, cm.fp}, {cm.fn, cm.tp}};
    const char* tags[2][2] = {{"TN", "FP"}, {"FN", "TP"}};
    const std::size_t peak = std::max({cm.tn, cm.fp, cm.fn, cm.tp, std::size_t{1}});
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const double t = static_cast<double>(counts[r][c]) / static_cast<double>(peak);
        // White to teal.
        const std::array<double, 3> rgb = {1.0 - t, 1.0 - t * (1.0 - 128.0 / 255.0),
                                           1.0 - t * (1.0 - 128.0 / 255.0)};
        const double x = x0 + c * cell, y = top + r * cell;
        doc.rect(x, y, cell, cell, rgb_hex(rgb), "stroke=\"#333333\" stroke-width=\"0.8\"");
        const char* ink = t > 0.55 ? "#ffffff" : "#000000";
        doc.text(x + cell / 2, y + cell / 2, fmt::format("{}", counts[r][c]), 16, "middle",
                 fmt::format("fill=\"{}\"", ink));
        doc.text(x + cell / 2, y + cell / 2 + 18, tags[r][c], 11, "middle",
                 fmt::format("fill=\"{}\"", ink));
      }
    }
    doc.text(x0 + cell, top - 8, cms[k].name, 13, "middle", "font-weight=\"bold\"");
    doc.text(x0 + cell, top + 2 * cell + 18, "predicted 0 | 1", 11);
    doc.text(x0 - 8, top + cell, "actual 0 | 1", 11, "middle",
             fmt::format("transform=\"rotate(-90 {:.3f} {:.3f})\"", x0 - 8, top + cell));
  }
  return doc.finish();
}

std::string render_metric_bars(const std::vector<MetricRow>& rows,
                               const PlotSpec& spec) {
  if (rows.empty()) throw DataError("render_metric_bars: no rows");
  static constexpr const char* kNames[] = {"accuracy", "precision", "recall", "F1"};
  SvgDocument doc(spec.width, spec.height, spec.provenance);
  const Frame f = make_frame(spec, {0.0, static_cast<double>(rows.size()), 0.0, 1.15},
                             kLegendWidth - 40);
  const double slot = f.width / static_cast<double>(rows.size());
  const double bw = slot * 0.8 / 4.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double values[4] = {rows[k].accuracy, rows[k].precision, rows[k].recall, rows[k].f1};
    for (int m = 0; m < 4; ++m) {
      const double x = f.left + slot * static_cast<double>(k) + slot * 0.1 + bw * m;
      const double y = f.py(values[m]);
      doc.rect(x, y, bw, f.top + f.height - y, viridis_hex(0.1 + 0.28 * m),
               "stroke=\"#333333\" stroke-width=\"0.4\"");
      const double tx = x + bw / 2 + 3, ty = y - 4;
      doc.text(tx, ty, fmt::format("{:.3f}", values[m]), 9, "start",
               fmt::format("transform=\"rotate(-90 {:.3f} {:.3f})\"", tx, ty));
    }
    // Cross-validation spread on the accuracy bar.
    const double ax = f.left + slot * static_cast<double>(k) + slot * 0.1 + bw / 2;
    doc.line(ax, f.py(std::min(1.15, rows[k].accuracy + rows[k].accuracy_sd)), ax,
             f.py(std::max(0.0, rows[k].accuracy - rows[k].accuracy_sd)), "#000000", 1.2);
    doc.text(f.left + slot * (static_cast<double>(k) + 0.5), f.top + f.height + 18,
             rows[k].classifier, 12);
  }
  detail::draw_axes(doc, f, spec.title, spec.x_label, spec.y_label, false);
  for (int m = 0; m < 4; ++m) {
    const double ly = f.top + 16 + 20 * m;
    doc.rect(f.left + f.width + 16, ly - 10, 12, 12, viridis_hex(0.1 + 0.28 * m));
    doc.text(f.left + f.width + 34, ly, kNames[m], 12, "start");
  }
  return doc.finish();
}

std::vector<MetricRow> metric_rows(const nlohmann::json& scenario) {
  std::vector<MetricRow> rows;
  const auto& cls = scenario.at("classifiers");
  for (auto kind : learners::kAllClassifiers) {
    const std::string name(learners::kind_name(kind));
    if (!cls.contains(name)) continue;
    const auto& c = cls.at(name);
    rows.push_back({name, c.at("cv_accuracy_mean").get<double>(),
                    c.at("cv_accuracy_sd").get<double>(),
                    c.at("holdout").at("precision").get<double>(),
                    c.at("holdout").at("recall").get<double>(),
                    c.at("holdout").at("f1").get<double>()});
  }
  return rows;
}

std::vector<NamedConfusion> holdout_confusions(const nlohmann::json& scenario) {
  std::vector<NamedConfusion> out;
  const auto& cls = scenario.at("classifiers");
  for (auto kind : learners::kAllClassifiers) {
    const std::string name(learners::kind_name(kind));
    if (!cls.contains(name)) continue;
    const auto& j = cls.at(name).at("holdout").at("confusion");
    out.push_back({name,
                   {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                    j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>()}});
  }
  return out;
}

}  // namespace chirpmap::render
