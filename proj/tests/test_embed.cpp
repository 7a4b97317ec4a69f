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
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "chirpmap/embed.hpp"
#include "chirpmap/error.hpp"
#include "oracles.hpp"

namespace chirpmap::embed {
namespace {

Matrix random_p(std::size_t n, std::size_t d, double perplexity, std::uint64_t seed) {
  const auto c = conditional_affinities(oracle::normal_matrix(n, d, seed), perplexity);
  return symmetrize(c.p).p;
}

double column_sd(const Matrix& m, std::size_t c) {
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, c);
  mean /= static_cast<double>(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) sq += (m(i, c) - mean) * (m(i, c) - mean);
  return std::sqrt(sq / static_cast<double>(m.rows()));
}

// Share of points whose k nearest embedding neighbours carry their label.
double neighbour_purity(const Matrix& y, const std::vector<int>& labels, std::size_t k) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (j != i) d.emplace_back(squared_distance(y.row(i), y.row(j)), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t r = 0; r < k; ++r) agree += labels[d[r].second] == labels[i];
  }
  return static_cast<double>(agree) / static_cast<double>(y.rows() * k);
}

TEST(ConditionalAffinities, EquilateralTriangleRowsAreHalves) {
  // Unit vectors: every squared distance is exactly 2.
  const Matrix x(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  for (double perp : {1.1, 1.5, 1.9}) {
    const auto c = conditional_affinities(x, perp);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(c.p(i, j), i == j ? 0.0 : 0.5, 1e-12);
      }
    }
  }
}

TEST(ConditionalAffinities, RealizedPerplexityOnSeededData) {
  const auto c = conditional_affinities(oracle::normal_matrix(10, 3, 42), 5.0);
  EXPECT_EQ(c.unconverged_rows, 0u);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto row = c.p.row(i);
    EXPECT_EQ(row[i], 0.0);
    double sum = 0.0;
    for (double v : row) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(oracle::perplexity_of_row(row), 5.0, 1e-3);
  }
}

TEST(ConditionalAffinities, PerplexityMustBeBelowN) {
  EXPECT_THROW(conditional_affinities(oracle::normal_matrix(5, 3, 1), 5.0), UsageError);
}

TEST(Symmetrize, SymmetricInputIsDividedByN) {
  const auto c = conditional_affinities(
      Matrix(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}), 1.5);
  const auto p = symmetrize(c.p).p;
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(p.data()[k], c.p.data()[k] / 3.0, 1e-15);
}

TEST(Symmetrize, MatchesBruteForceAndInvariants) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = conditional_affinities(oracle::normal_matrix(5, 3, seed), 2.5);
    const auto p = symmetrize(c.p).p;
    const auto expect = oracle::symmetrize(c.p);
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(p(i, i), 0.0);
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_NEAR(p(i, j), expect(i, j), 1e-15);
        EXPECT_NEAR(p(i, j), p(j, i), 1e-12);
        sum += p(i, j);
      }
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(LowDimSimilarities, ClosedFormCases) {
  const auto two = low_dim_similarities(Matrix(2, 2, std::vector<double>{0, 0, 37, -4}));
  EXPECT_DOUBLE_EQ(two.q(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(two.q(1, 0), 0.5);
  const double h = std::sqrt(3.0) / 2.0;
  const auto tri = low_dim_similarities(Matrix(3, 2, std::vector<double>{0, 0, 2, 0, 1, 2 * h}));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) {
        EXPECT_NEAR(tri.q(i, j), 1.0 / 6.0, 1e-15);
      }
    }
  }
}

TEST(LowDimSimilarities, MatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix y = oracle::normal_matrix(4, 2, seed, 3.0);
    const auto q = low_dim_similarities(y).q;
    const auto expect = oracle::student_q(y);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(q.data()[k], expect.data()[k], 1e-12);
  }
}

TEST(KlDivergence, ClosedFormsAndOracle) {
  const Matrix p = random_p(6, 3, 2.0, 7);
  EXPECT_EQ(kl_divergence(p, p), 0.0);

  const std::size_t n = 5, m = n * (n - 1);
  Matrix single(n, n), uniform(n, n, 1.0 / static_cast<double>(m));
  single(1, 3) = 1.0;
  for (std::size_t i = 0; i < n; ++i) uniform(i, i) = 0.0;
  EXPECT_NEAR(kl_divergence(single, uniform), std::log(static_cast<double>(m)), 1e-12);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix ps = random_p(6, 3, 2.0, seed);
    const Matrix q = oracle::student_q(oracle::normal_matrix(6, 2, seed + 100));
    const double c = kl_divergence(ps, q);
    EXPECT_NEAR(c, oracle::kl(ps, q), 1e-12);
    EXPECT_GE(c, 0.0);
  }
}

TEST(KlGradient, ZeroAtPEqualsQ) {
  const Matrix y = oracle::normal_matrix(7, 2, 3);
  const Matrix g = kl_gradient(low_dim_similarities(y).q, y);
  for (double v : g.data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(KlGradient, TranslationInvariance) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix g = kl_gradient(random_p(12, 3, 4.0, seed), oracle::normal_matrix(12, 2, seed + 50));
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      sx += g(i, 0);
      sy += g(i, 1);
    }
    EXPECT_NEAR(sx, 0.0, 1e-14);
    EXPECT_NEAR(sy, 0.0, 1e-14);
  }
}

TEST(KlGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix p = random_p(8, 3, 3.0, seed);
    const Matrix y = oracle::normal_matrix(8, 2, seed + 1000);
    const Matrix g = kl_gradient(p, y);
    const Matrix fd = oracle::fd_kl_gradient(p, y);
    for (std::size_t k = 0; k < g.data().size(); ++k) {
      const double rel = std::abs(g.data()[k] - fd.data()[k]) /
                         std::max(std::abs(fd.data()[k]), 1e-6);
      EXPECT_LT(rel, 1e-5) << "seed " << seed << " component " << k;
    }
  }
}

TEST(KlDivergence, RigidMotionInvariance) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix p = random_p(15, 3, 5.0, seed);
    const Matrix y = oracle::normal_matrix(15, 2, seed + 7);
    Rng rng(seed);
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    const double dx = 10.0 * rng.normal(), dy = 10.0 * rng.normal();
    Matrix moved(15, 2);
    for (std::size_t i = 0; i < 15; ++i) {
      moved(i, 0) = std::cos(t) * y(i, 0) - std::sin(t) * y(i, 1) + dx;
      moved(i, 1) = std::sin(t) * y(i, 0) + std::cos(t) * y(i, 1) + dy;
    }
    EXPECT_NEAR(kl_divergence(p, low_dim_similarities(y).q),
                kl_divergence(p, low_dim_similarities(moved).q), 1e-9);
  }
}

TEST(PcaInit, AxisAlignedDataIsReproducedUpToScale) {
  // Centred, mutually orthogonal columns, so the principal axes are the
  // coordinate axes exactly.
  Matrix x(40, 3);
  for (std::size_t i = 0; i < 40; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / 40.0;
    x(i, 0) = 5.0 * std::cos(t);
    x(i, 1) = 0.5 * std::sin(t);
    x(i, 2) = 0.0;
  }
  const auto init = pca_init(x, 1);
  ASSERT_FALSE(init.fallback);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(column_sd(init.coords, c), 1e-4, 1e-16);
    double sxy = 0.0, sxx = 0.0, syy = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < 40; ++i) mx += x(i, c);
    mx /= 40.0;
    for (std::size_t i = 0; i < 40; ++i) {
      sxy += (x(i, c) - mx) * init.coords(i, c);
      sxx += (x(i, c) - mx) * (x(i, c) - mx);
      syy += init.coords(i, c) * init.coords(i, c);
    }
    EXPECT_NEAR(std::abs(sxy) / std::sqrt(sxx * syy), 1.0, 1e-9);
  }
}

TEST(PcaInit, LineFallsBackToNoise) {
  Matrix x(20, 3);
  for (std::size_t i = 0; i < 20; ++i) {
    const double t = static_cast<double>(i);
    x(i, 0) = t;
    x(i, 1) = 2.0 * t + 1.0;
    x(i, 2) = -t;
  }
  const auto a = pca_init(x, 5);
  EXPECT_TRUE(a.fallback);
  EXPECT_EQ(a.coords, pca_init(x, 5).coords);
  EXPECT_LT(column_sd(a.coords, 0), 1e-3);
}

TEST(PcaInit, CapturesMaximalVariance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Matrix x = oracle::normal_matrix(20, 3, seed);
    for (std::size_t i = 0; i < 20; ++i) {
      x(i, 0) *= 3.0;
      x(i, 2) += 0.7 * x(i, 0);
    }
    Eigen::MatrixXd xe = oracle::to_eigen(x);
    const Eigen::MatrixXd centred = xe.rowwise() - xe.colwise().mean();
    const Eigen::MatrixXd y = oracle::to_eigen(pca_init(x, 1).coords);
    // The projection is linear in the centred data, so recover its basis.
    const Eigen::MatrixXd basis = centred.colPivHouseholderQr().solve(y);
    const double ours = oracle::captured_variance(centred, basis);

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
    const auto s = svd.singularValues();
    EXPECT_NEAR(ours, s(0) * s(0) + s(1) * s(1), 1e-9 * ours);
    Rng rng(seed);
    for (int trial = 0; trial < 500; ++trial) {
      Eigen::MatrixXd other(3, 2);
      for (Eigen::Index k = 0; k < 6; ++k) other.data()[k] = rng.normal();
      EXPECT_GE(ours + 1e-9, oracle::captured_variance(centred, other));
    }
  }
}

TEST(RunTsne, DeterministicTraceAndBlobPurity) {
  const auto blobs = oracle::gaussian_blobs({{0, 0, 0}, {10, 0, 0}, {0, 10, 0}}, 30, 1.0, 3);
  TsneConfig cfg;
  cfg.perplexity = 15;
  cfg.n_iterations = 500;
  cfg.seed = 77;
  const auto a = run_tsne(blobs.x, cfg);
  const auto b = run_tsne(blobs.x, cfg);
  EXPECT_EQ(a.coords, b.coords);
  EXPECT_EQ(a.kl_trace, b.kl_trace);
  ASSERT_EQ(a.kl_trace.size(), 500u);
  // final_kl is measured after the last update, without exaggeration.
  EXPECT_NEAR(a.final_kl, a.kl_trace.back(), 0.01);
  EXPECT_LT(a.kl_trace.back(), a.kl_trace[static_cast<std::size_t>(cfg.exaggeration_until_iter) - 1]);
  for (double v : a.coords.data()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(neighbour_purity(a.coords, blobs.labels, 5), 0.95);
}

TEST(RunTsne, DuplicatesAreJitteredAndRecorded) {
  Matrix x = oracle::normal_matrix(30, 3, 4);
  for (std::size_t k = 0; k < 3; ++k) {
    x(1, k) = x(0, k);
    x(2, k) = x(0, k);
  }
  TsneConfig cfg;
  cfg.perplexity = 5;
  cfg.n_iterations = 100;
  cfg.exaggeration_until_iter = 50;
  const auto e = run_tsne(x, cfg);
  EXPECT_EQ(e.jittered_duplicates, 2u);
  EXPECT_EQ(embedding_metadata(e)["fallbacks"]["jittered_duplicates"], 2);
}

TEST(RunTsne, ConfigValidation) {
  const Matrix x = oracle::normal_matrix(10, 3, 1);
  TsneConfig cfg;
  EXPECT_THROW(run_tsne(x, cfg), UsageError);  // perplexity 30 >= 10
  cfg.perplexity = 3;
  cfg.n_iterations = 100;
  EXPECT_THROW(run_tsne(x, cfg), UsageError);  // exaggeration past the end
}

TEST(RunTsne, DivergenceReportsIteration) {
  TsneConfig cfg;
  cfg.perplexity = 3;
  cfg.n_iterations = 50;
  cfg.exaggeration_until_iter = 10;
  cfg.learning_rate = 1e305;
  try {
    run_tsne(oracle::normal_matrix(10, 3, 1), cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(EmbeddingCsv, RoundTripIsExact) {
  Embedding e;
  e.ids = {"a", "b", "c"};
  e.coords = oracle::normal_matrix(3, 2, 8, 1e3);
  e.coords(0, 0) = 1.0 / 3.0;
  std::ostringstream out;
  write_embedding_csv(out, e);
  std::istringstream in(out.str());
  const auto back = read_embedding_csv(in);
  EXPECT_EQ(back.ids, e.ids);
  EXPECT_EQ(back.coords, e.coords);
}

}  // namespace
}  // namespace chirpmap::embed
