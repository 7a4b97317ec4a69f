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

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "chirpmap/kernels.hpp"
#include "chirpmap/learners.hpp"
#include "chirpmap/random.hpp"

namespace {

using namespace chirpmap;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

void BM_Distances(benchmark::State& state) {
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pairwise_sq_distances(x));
}

void BM_DistancesReference(benchmark::State& state) {
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::pairwise_sq_distances(x));
}

struct GradientInput {
  Matrix p, y;
};

GradientInput gradient_input(std::size_t n) {
  const Matrix d2 = kernels::pairwise_sq_distances(random_matrix(n, 3, 2));
  std::vector<kernels::RowCalibration> cal;
  Matrix p = kernels::conditional_affinities(d2, 30.0, cal);
  // Any nonnegative matrix serves for timing; symmetrize loosely.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = (p(i, j) + p(j, i)) / (2.0 * static_cast<double>(n));
      p(i, j) = p(j, i) = v;
    }
  }
  return {p, random_matrix(n, 2, 3)};
}

void BM_Gradient(benchmark::State& state) {
  const auto in = gradient_input(static_cast<std::size_t>(state.range(0)));
  Matrix g;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::tsne_gradient(in.p, in.y, 1.0, g));
}

void BM_GradientReference(benchmark::State& state) {
  const auto in = gradient_input(static_cast<std::size_t>(state.range(0)));
  Matrix g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::reference::tsne_gradient(in.p, in.y, 1.0, g));
  }
}

learners::TrainedModel forest_model() {
  learners::LabeledPoints d;
  d.coords = random_matrix(300, 2, 4);
  for (std::size_t i = 0; i < 300; ++i) d.labels.push_back(d.coords(i, 0) > 0.0 ? 1 : 0);
  learners::ClassifierConfig c;
  return learners::fit_classifier(d, c);
}

Matrix grid_points(std::size_t g) {
  Matrix centers(g * g, 2);
  for (std::size_t iy = 0; iy < g; ++iy) {
    for (std::size_t ix = 0; ix < g; ++ix) {
      centers(iy * g + ix, 0) = -3.0 + 6.0 * (static_cast<double>(ix) + 0.5) / g;
      centers(iy * g + ix, 1) = -3.0 + 6.0 * (static_cast<double>(iy) + 0.5) / g;
    }
  }
  return centers;
}

void BM_PredictGrid(benchmark::State& state) {
  const auto model = forest_model();
  const Matrix centers = grid_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(learners::predict(model, centers));
}

void BM_PredictGridReference(benchmark::State& state) {
  const auto model = forest_model();
  const Matrix centers = grid_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(learners::reference::predict(model, centers));
}

void BM_FitForest(benchmark::State& state) {
  learners::LabeledPoints d;
  d.coords = random_matrix(static_cast<std::size_t>(state.range(0)), 2, 5);
  for (std::size_t i = 0; i < d.coords.rows(); ++i) {
    d.labels.push_back(d.coords(i, 0) * d.coords(i, 1) > 0.0 ? 1 : 0);
  }
  learners::ForestConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(learners::fit_random_forest(d, c));
}

BENCHMARK(BM_Distances)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistancesReference)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gradient)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientReference)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictGrid)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictGridReference)->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitForest)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
