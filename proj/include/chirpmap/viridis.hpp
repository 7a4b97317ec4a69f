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

#ifndef CHIRPMAP_VIRIDIS_HPP
#define CHIRPMAP_VIRIDIS_HPP

#include <array>
#include <string>

namespace chirpmap::render {

extern const std::array<std::array<double, 3>, 256> kViridisTable;

// Linear interpolation over the 256 control points; t is clamped to [0, 1].
std::array<double, 3> viridis(double t) noexcept;
// "#rrggbb" of viridis(t), channels rounded to the nearest 8-bit value.
std::string viridis_hex(double t);
std::string rgb_hex(const std::array<double, 3>& rgb);

}  // namespace chirpmap::render

#endif  // CHIRPMAP_VIRIDIS_HPP
