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

#ifndef CHIRPMAP_SRC_SVG_HPP
#define CHIRPMAP_SRC_SVG_HPP

// Minimal SVG 1.1 text builder shared by the plot functions. Coordinates
// are printed with fixed precision so output is byte-stable.

#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace chirpmap::render::detail {

std::string xml_escape(std::string_view text);

class SvgDocument {
 public:
  SvgDocument(int width, int height, std::string_view provenance = {});

  void raw(std::string_view text) { body_ += text; }
  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view extra = {});
  void circle(double cx, double cy, double r, std::string_view fill,
              std::string_view extra = {});
  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0);
  // anchor: start | middle | end
  void text(double x, double y, std::string_view content, int size = 12,
            std::string_view anchor = "middle", std::string_view extra = {});

  std::string finish() const;

 private:
  int width_, height_;
  std::string head_;
  std::string body_;
};

// Maps a data rectangle onto the pixel plot area (y axis pointing up).
struct Frame {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;

  double px(double x) const { return left + (x - x_min) / (x_max - x_min) * width; }
  double py(double y) const {
    return top + height - (y - y_min) / (y_max - y_min) * height;
  }
};

// Tick positions at a 1/2/5 x 10^k step covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 5);

// Border, ticks, tick labels, axis labels and title. Categorical plots
// pass x_ticks = false and label their own slots.
void draw_axes(SvgDocument& doc, const Frame& f, std::string_view title,
               std::string_view x_label, std::string_view y_label,
               bool x_ticks = true);

std::string fmt_tick(double v);

}  // namespace chirpmap::render::detail

#endif  // CHIRPMAP_SRC_SVG_HPP
