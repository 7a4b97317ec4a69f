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

#include <fmt/format.h>

#include "chirpmap/viridis.hpp"

namespace chirpmap::render {

std::array<double, 3> viridis(double t) noexcept {
  if (!(t > 0.0)) t = 0.0;  // also maps NaN to the low end
  if (t > 1.0) t = 1.0;
  const double pos = t * 255.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min<std::size_t>(lo + 1, 255);
  const double frac = pos - static_cast<double>(lo);
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = kViridisTable[lo][c] + frac * (kViridisTable[hi][c] - kViridisTable[lo][c]);
  }
  return out;
}

std::string rgb_hex(const std::array<double, 3>& rgb) {
  auto byte = [](double v) {
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  return fmt::format("#{:02x}{:02x}{:02x}", byte(rgb[0]), byte(rgb[1]), byte(rgb[2]));
}

std::string viridis_hex(double t) { return rgb_hex(viridis(t)); }

}  // namespace chirpmap::render
