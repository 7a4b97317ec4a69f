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

#include "svg.hpp"

#include <cmath>

namespace chirpmap::render::detail {

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

SvgDocument::SvgDocument(int width, int height, std::string_view provenance)
    : width_(width), height_(height) {
  head_ = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  if (!provenance.empty()) {
    // "--" is not allowed inside XML comments.
    std::string safe(provenance);
    for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- ");
    head_ += fmt::format("<!-- {} -->\n", safe);
  }
  head_ += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" "
      "height=\"{1}\" viewBox=\"0 0 {0} {1}\" font-family=\"Helvetica, Arial, "
      "sans-serif\">\n<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" "
      "fill=\"#ffffff\"/>\n",
      width_, height_);
}

void SvgDocument::rect(double x, double y, double w, double h,
                       std::string_view fill, std::string_view extra) {
  body_ += fmt::format(
      "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
      "fill=\"{}\"{}{}/>\n",
      x, y, w, h, fill, extra.empty() ? "" : " ", extra);
}

void SvgDocument::circle(double cx, double cy, double r, std::string_view fill,
                         std::string_view extra) {
  body_ += fmt::format(
      "<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.2f}\" fill=\"{}\"{}{}/>\n", cx,
      cy, r, fill, extra.empty() ? "" : " ", extra);
}

void SvgDocument::line(double x1, double y1, double x2, double y2,
                       std::string_view stroke, double width) {
  body_ += fmt::format(
      "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" "
      "stroke=\"{}\" stroke-width=\"{:.2f}\"/>\n",
      x1, y1, x2, y2, stroke, width);
}

void SvgDocument::text(double x, double y, std::string_view content, int size,
                       std::string_view anchor, std::string_view extra) {
  body_ += fmt::format(
      "<text x=\"{:.3f}\" y=\"{:.3f}\" font-size=\"{}\" text-anchor=\"{}\"{}{}>{}</text>\n",
      x, y, size, anchor, extra.empty() ? "" : " ", extra, xml_escape(content));
}

std::string SvgDocument::finish() const { return head_ + body_ + "</svg>\n"; }

std::vector<double> nice_ticks(double lo, double hi, int target) {
  std::vector<double> ticks;
  const double span = hi - lo;
  if (!(span > 0.0) || !std::isfinite(span)) return ticks;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0) * mag;
  for (double k = std::ceil(lo / step); k * step <= hi + step * 1e-9; k += 1.0) {
    double v = k * step;
    if (std::abs(v) < step * 1e-9) v = 0.0;
    ticks.push_back(v);
  }
  return ticks;
}

std::string fmt_tick(double v) { return fmt::format("{:.4g}", v); }

void draw_axes(SvgDocument& doc, const Frame& f, std::string_view title,
               std::string_view x_label, std::string_view y_label,
               bool x_ticks) {
  doc.raw(fmt::format(
      "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" "
      "fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
      f.left, f.top, f.width, f.height));
  const double bottom = f.top + f.height;
  for (double t : x_ticks ? nice_ticks(f.x_min, f.x_max) : std::vector<double>{}) {
    const double x = f.px(t);
    doc.line(x, bottom, x, bottom + 5, "#000000");
    doc.text(x, bottom + 18, fmt_tick(t), 11);
  }
  for (double t : nice_ticks(f.y_min, f.y_max)) {
    const double y = f.py(t);
    doc.line(f.left - 5, y, f.left, y, "#000000");
    doc.text(f.left - 8, y + 4, fmt_tick(t), 11, "end");
  }
  if (!x_label.empty()) doc.text(f.left + f.width / 2, bottom + 40, x_label, 13);
  if (!y_label.empty()) {
    const double cx = f.left - 48, cy = f.top + f.height / 2;
    doc.text(cx, cy, y_label, 13, "middle",
             fmt::format("transform=\"rotate(-90 {:.3f} {:.3f})\"", cx, cy));
  }
  if (!title.empty()) doc.text(f.left + f.width / 2, f.top - 14, title, 15, "middle",
                               "font-weight=\"bold\"");
}

}  // namespace chirpmap::render::detail
