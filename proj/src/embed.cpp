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

#include "chirpmap/embed.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/random.hpp"

namespace chirpmap::embed {

void TsneConfig::validate(std::size_t n) const {
  auto fail = [](const std::string& msg) { throw UsageError("tsne: " + msg); };
  if (n < 3) fail(fmt::format("need at least 3 points, got {}", n));
  if (!(perplexity > 0.0)) fail("perplexity must be positive");
  if (!(perplexity < static_cast<double>(n)))
    fail(fmt::format("perplexity {} must be below the point count {}",
                     perplexity, n));
  if (n_iterations <= 0) fail("n_iterations must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(momentum_early >= 0.0 && momentum_early < 1.0) ||
      !(momentum_late >= 0.0 && momentum_late < 1.0))
    fail("momentum must lie in [0, 1)");
  if (momentum_switch_iter < 0) fail("momentum_switch_iter must be >= 0");
  if (!(exaggeration_factor >= 1.0)) fail("exaggeration_factor must be >= 1");
  if (exaggeration_until_iter < 0 || exaggeration_until_iter > n_iterations)
    fail("exaggeration_until_iter must lie in [0, n_iterations]");
  if (output_dims != 2) fail("output_dims is fixed at 2");
}

void to_json(nlohmann::json& j, const TsneConfig& c) {
  j = nlohmann::json{{"perplexity", c.perplexity},
                     {"n_iterations", c.n_iterations},
                     {"learning_rate", c.learning_rate},
                     {"momentum_early", c.momentum_early},
                     {"momentum_late", c.momentum_late},
                     {"momentum_switch_iter", c.momentum_switch_iter},
                     {"exaggeration_factor", c.exaggeration_factor},
                     {"exaggeration_until_iter", c.exaggeration_until_iter},
                     {"seed", c.seed},
                     {"output_dims", c.output_dims}};
}

void from_json(const nlohmann::json& j, TsneConfig& c) {
  TsneConfig d;
  c.perplexity = j.value("perplexity", d.perplexity);
  c.n_iterations = j.value("n_iterations", d.n_iterations);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.momentum_early = j.value("momentum_early", d.momentum_early);
  c.momentum_late = j.value("momentum_late", d.momentum_late);
  c.momentum_switch_iter = j.value("momentum_switch_iter", d.momentum_switch_iter);
  c.exaggeration_factor = j.value("exaggeration_factor", d.exaggeration_factor);
  c.exaggeration_until_iter =
      j.value("exaggeration_until_iter", d.exaggeration_until_iter);
  c.seed = j.value("seed", d.seed);
  c.output_dims = j.value("output_dims", d.output_dims);
}

ConditionalAffinities conditional_affinities(const Matrix& x,
                                             double perplexity) {
  const std::size_t n = x.rows();
  if (n < 3) throw UsageError("conditional_affinities: need at least 3 points");
  if (!(perplexity > 0.0 && perplexity < static_cast<double>(n))) {
    throw UsageError(fmt::format(
        "conditional_affinities: perplexity {} outside (0, {})", perplexity, n));
  }
  ConditionalAffinities out;
  const Matrix d2 = kernels::pairwise_sq_distances(x);
  out.p = kernels::conditional_affinities(d2, perplexity, out.rows);
  out.unconverged_rows = static_cast<std::size_t>(std::count_if(
      out.rows.begin(), out.rows.end(),
      [](const kernels::RowCalibration& r) { return !r.converged; }));
  return out;
}

AffinityMatrix symmetrize(const Matrix& conditionals) {
  const std::size_t n = conditionals.rows();
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  AffinityMatrix out{Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (conditionals(i, j) + conditionals(j, i)) * scale;
      out.p(i, j) = v;
      out.p(j, i) = v;
    }
  }
  return out;
}

LowDimSimilarities low_dim_similarities(const Matrix& coords) {
  kernels::StudentT st = kernels::student_t_weights(coords);
  const std::size_t n = coords.rows();
  LowDimSimilarities out{Matrix(n, n), std::move(st.weights), st.total};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out.q(i, j) = out.weights(i, j) / out.total;
  return out;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw UsageError("kl_divergence: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (i == j) continue;
      const double pij = p(i, j);
      if (pij > 0.0) kl += pij * std::log(pij / q(i, j));
    }
  }
  return kl;
}

Matrix kl_gradient(const Matrix& p, const Matrix& coords) {
  Matrix grad;
  kernels::tsne_gradient(p, coords, 1.0, grad);
  return grad;
}

namespace {

Matrix gaussian_noise(std::size_t n, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix out(n, 2);
  for (double& v : out.data()) v = scale * rng.normal();
  return out;
}

}  // namespace

PcaInit pca_init(const Matrix& x, std::uint64_t seed) {
  constexpr double kTargetSd = 1e-4;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 3) throw UsageError("pca_init: need at least 3 points");

  Eigen::MatrixXd centered(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) = x(i, j) - mean;
  }

  PcaInit out;
  if (d < 2) {
    out.coords = gaussian_noise(n, seed, kTargetSd);
    out.fallback = true;
    return out;
  }

  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues come back ascending.
  const Eigen::VectorXd evals = solver.eigenvalues();
  const double top = evals(d - 1);
  const double second = evals(d - 2);
  if (!(top > 0.0) || !(second > 1e-12 * top)) {
    out.coords = gaussian_noise(n, seed, kTargetSd);
    out.fallback = true;
    return out;
  }

  out.coords = Matrix(n, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - c);
    for (std::size_t k = 0; k < d; ++k) {
      if (std::abs(axis(k)) > 1e-12) {
        if (axis(k) < 0.0) axis = -axis;
        break;
      }
    }
    const Eigen::VectorXd proj = centered * axis;
    const double mean = proj.mean();
    const double sd =
        std::sqrt((proj.array() - mean).square().sum() / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      out.coords(i, c) = (proj(i) - mean) / sd * kTargetSd;
    }
  }
  return out;
}

std::size_t jitter_duplicates(Matrix& x, std::uint64_t seed) {
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(),
                                        rb.end());
  };
  std::stable_sort(order.begin(), order.end(), row_less);

  std::vector<bool> duplicate(n, false);
  for (std::size_t k = 1; k < n; ++k) {
    const auto prev = x.row(order[k - 1]);
    const auto cur = x.row(order[k]);
    if (std::equal(prev.begin(), prev.end(), cur.begin())) {
      // stable_sort keeps the lowest index first within a group.
      duplicate[order[k]] = true;
    }
  }

  Rng rng(seed);
  std::size_t altered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!duplicate[i]) continue;
    for (double& v : x.row(i)) v += 1e-10 * rng.normal();
    ++altered;
  }
  return altered;
}

Embedding run_tsne(const Matrix& x, const TsneConfig& config,
                   std::vector<std::string> ids) {
  const std::size_t n = x.rows();
  config.validate(n);
  if (!ids.empty() && ids.size() != n) {
    throw UsageError("run_tsne: ids are not aligned with the rows");
  }

  Embedding emb;
  emb.ids = std::move(ids);
  emb.config = config;

  Matrix data = x;
  emb.jittered_duplicates =
      jitter_duplicates(data, derive_seed(config.seed, "jitter"));

  const ConditionalAffinities cond = conditional_affinities(data, config.perplexity);
  emb.unconverged_rows = cond.unconverged_rows;
  const Matrix p = symmetrize(cond.p).p;

  PcaInit init = pca_init(data, derive_seed(config.seed, "pca"));
  emb.pca_fallback = init.fallback;
  Matrix y = std::move(init.coords);
  Matrix velocity(n, 2);
  Matrix grad;
  emb.kl_trace.reserve(static_cast<std::size_t>(config.n_iterations));

  for (int iter = 0; iter < config.n_iterations; ++iter) {
    const double exaggeration =
        iter < config.exaggeration_until_iter ? config.exaggeration_factor : 1.0;
    const double momentum = iter < config.momentum_switch_iter
                                ? config.momentum_early
                                : config.momentum_late;
    emb.kl_trace.push_back(kernels::tsne_gradient(p, y, exaggeration, grad));
    auto& v = velocity.data();
    auto& yd = y.data();
    const auto& g = grad.data();
    for (std::size_t k = 0; k < yd.size(); ++k) {
      v[k] = momentum * v[k] - config.learning_rate * g[k];
      yd[k] += v[k];
      if (!std::isfinite(yd[k])) {
        throw NumericError(fmt::format(
            "run_tsne: non-finite coordinate at iteration {}", iter));
      }
    }
  }

  emb.final_kl = kernels::tsne_gradient(p, y, 1.0, grad);
  emb.coords = std::move(y);
  return emb;
}

void write_embedding_csv(std::ostream& out, const Embedding& e) {
  out << "id,tsne_x,tsne_y\n";
  for (std::size_t i = 0; i < e.coords.rows(); ++i) {
    const std::string id = i < e.ids.size() ? e.ids[i] : std::to_string(i);
    out << fmt::format("{},{},{}\n", id, e.coords(i, 0), e.coords(i, 1));
  }
}

Embedding read_embedding_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,tsne_x,tsne_y") {
    throw DataError("embedding file has an unexpected header: " + line);
  }
  Embedding e;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw DataError(fmt::format("embedding line {} is malformed", line_no));
    }
    e.ids.push_back(line.substr(0, c1));
    for (auto [b, en] : {std::pair{c1 + 1, c2}, std::pair{c2 + 1, line.size()}}) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + en, v);
      if (ec != std::errc() || ptr != line.data() + en || !std::isfinite(v)) {
        throw DataError(fmt::format("embedding line {} has a bad coordinate",
                                    line_no));
      }
      values.push_back(v);
    }
  }
  e.coords = Matrix(e.ids.size(), 2, std::move(values));
  return e;
}

nlohmann::json embedding_metadata(const Embedding& e) {
  return nlohmann::json{{"config", e.config},
                        {"seed", e.config.seed},
                        {"n_points", e.coords.rows()},
                        {"final_kl", e.final_kl},
                        {"kl_trace", e.kl_trace},
                        {"fallbacks",
                         {{"pca_init_noise", e.pca_fallback},
                          {"jittered_duplicates", e.jittered_duplicates},
                          {"unconverged_perplexity_rows", e.unconverged_rows}}}};
}

}  // namespace chirpmap::embed
