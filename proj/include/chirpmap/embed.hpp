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

#ifndef CHIRPMAP_EMBED_HPP
#define CHIRPMAP_EMBED_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chirpmap/kernels.hpp"
#include "chirpmap/matrix.hpp"

namespace chirpmap::embed {

// Exact t-SNE settings. Defaults are conventional reference values, not
// values fitted to any dataset.
struct TsneConfig {
  double perplexity = 30.0;
  int n_iterations = 1000;
  double learning_rate = 200.0;
  double momentum_early = 0.5;
  double momentum_late = 0.8;
  int momentum_switch_iter = 250;
  double exaggeration_factor = 12.0;
  int exaggeration_until_iter = 250;
  std::uint64_t seed = 0;
  int output_dims = 2;

  // Throws UsageError if the settings are invalid for n points.
  void validate(std::size_t n) const;
};

void to_json(nlohmann::json& j, const TsneConfig& c);
void from_json(const nlohmann::json& j, TsneConfig& c);

struct ConditionalAffinities {
  Matrix p;  // row-stochastic, zero diagonal
  std::vector<kernels::RowCalibration> rows;
  std::size_t unconverged_rows = 0;
};

// Gaussian row-conditionals calibrated per row to `perplexity`.
ConditionalAffinities conditional_affinities(const Matrix& x,
                                             double perplexity);

// Symmetric joint affinities over ordered pairs; sums to 1.
struct AffinityMatrix {
  Matrix p;
};

AffinityMatrix symmetrize(const Matrix& conditionals);

struct LowDimSimilarities {
  Matrix q;        // normalized, zero diagonal
  Matrix weights;  // (1 + |y_i - y_j|^2)^-1, zero diagonal
  double total = 0.0;
};

LowDimSimilarities low_dim_similarities(const Matrix& coords);

// sum_{i != j} p_ij ln(p_ij / q_ij); zero-mass terms contribute nothing.
double kl_divergence(const Matrix& p, const Matrix& q);

// dC/dy_i = 4 sum_j (p_ij - q_ij)(y_i - y_j)(1 + |y_i - y_j|^2)^-1
Matrix kl_gradient(const Matrix& p, const Matrix& coords);

struct PcaInit {
  Matrix coords;
  bool fallback = false;  // rank < 2: seeded Gaussian noise was used
};

// Projection onto the top two principal axes, each column rescaled to
// standard deviation 1e-4. Component signs are fixed by making the first
// nonzero loading positive.
PcaInit pca_init(const Matrix& x, std::uint64_t seed);

struct Embedding {
  std::vector<std::string> ids;
  Matrix coords;  // N x 2
  TsneConfig config;
  std::vector<double> kl_trace;  // one entry per iteration
  double final_kl = 0.0;
  bool pca_fallback = false;
  std::size_t jittered_duplicates = 0;
  std::size_t unconverged_rows = 0;
};

// Exact O(N^2) t-SNE with PCA initialization, early exaggeration and
// momentum. Bit-identical for identical (x, config). Throws NumericError
// carrying the iteration index if a coordinate becomes non-finite.
Embedding run_tsne(const Matrix& x, const TsneConfig& config,
                   std::vector<std::string> ids = {});

// Adds seeded N(0, 1e-10) noise to every exact duplicate row after its
// first occurrence. Returns the number of rows altered.
std::size_t jitter_duplicates(Matrix& x, std::uint64_t seed);

// `id,tsne_x,tsne_y` with round-trip precision.
void write_embedding_csv(std::ostream& out, const Embedding& e);
// Reads ids and coords back; config and trace are not part of the CSV.
Embedding read_embedding_csv(std::istream& in);
nlohmann::json embedding_metadata(const Embedding& e);

}  // namespace chirpmap::embed

#endif  // CHIRPMAP_EMBED_HPP
