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
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/learners.hpp"

namespace chirpmap::learners {

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
  const std::size_t n = points.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(points.row(i), x), i};
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  // pair ordering breaks distance ties by the lower row index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk),
                    dist.end());
  std::vector<std::size_t> out(kk);
  for (std::size_t i = 0; i < kk; ++i) out[i] = dist[i].second;
  return out;
}

int KnnModel::predict(std::span<const double> x) const {
  const auto nn = neighbors(x);
  int votes[2] = {0, 0};
  for (std::size_t i : nn) ++votes[labels[i]];
  if (votes[0] == votes[1]) return labels[nn.front()];
  return votes[1] > votes[0] ? 1 : 0;
}

KnnModel fit_knn(const LabeledPoints& data, const KnnConfig& config) {
  validate(data, /*require_both_classes=*/false);
  if (config.k < 1 || static_cast<std::size_t>(config.k) > data.coords.rows()) {
    throw UsageError(fmt::format("knn: k={} must lie in [1, {}]", config.k,
                                 data.coords.rows()));
  }
  return KnnModel{data.coords, data.labels, config.k};
}

}  // namespace chirpmap::learners
