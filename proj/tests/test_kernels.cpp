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

#include <cmath>

#include <gtest/gtest.h>
#include <omp.h>

#include "chirpmap/error.hpp"
#include "chirpmap/kernels.hpp"
#include "oracles.hpp"

namespace chirpmap::kernels {
namespace {

// Restores the OpenMP thread count on scope exit.
class ThreadCount {
 public:
  explicit ThreadCount(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved_); }

 private:
  int saved_;
};

TEST(Kernels, DistancesMatchReferenceBitForBit) {
  const Matrix x = oracle::normal_matrix(73, 3, 1);
  EXPECT_EQ(pairwise_sq_distances(x), reference::pairwise_sq_distances(x));
}

TEST(Kernels, AffinitiesMatchReferenceBitForBit) {
  const Matrix d2 = reference::pairwise_sq_distances(oracle::normal_matrix(64, 3, 2));
  std::vector<RowCalibration> a, b;
  EXPECT_EQ(conditional_affinities(d2, 12.0, a), reference::conditional_affinities(d2, 12.0, b));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].beta, b[i].beta);
    EXPECT_EQ(a[i].steps, b[i].steps);
  }
}

TEST(Kernels, StudentTAndGradientMatchReference) {
  const Matrix y = oracle::normal_matrix(57, 2, 3);
  const auto s1 = student_t_weights(y);
  const auto s2 = reference::student_t_weights(y);
  EXPECT_EQ(s1.weights, s2.weights);
  EXPECT_EQ(s1.total, s2.total);

  const Matrix d2 = pairwise_sq_distances(oracle::normal_matrix(57, 3, 4));
  std::vector<RowCalibration> cal;
  const Matrix p = oracle::symmetrize(conditional_affinities(d2, 10.0, cal));
  Matrix g1, g2;
  const double kl1 = tsne_gradient(p, y, 4.0, g1);
  const double kl2 = reference::tsne_gradient(p, y, 4.0, g2);
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(kl1, kl2);
}

TEST(Kernels, ThreadCountDoesNotChangeResults) {
  const Matrix x = oracle::normal_matrix(90, 3, 5);
  const Matrix y = oracle::normal_matrix(90, 2, 6);
  auto run = [&] {
    const Matrix d2 = pairwise_sq_distances(x);
    std::vector<RowCalibration> cal;
    const Matrix p = oracle::symmetrize(conditional_affinities(d2, 20.0, cal));
    Matrix g;
    const double c = tsne_gradient(p, y, 12.0, g);
    return std::make_pair(g, c);
  };
  std::pair<Matrix, double> one, many;
  {
    ThreadCount t(1);
    one = run();
  }
  {
    ThreadCount t(4);
    many = run();
  }
  EXPECT_EQ(one.first, many.first);
  EXPECT_EQ(one.second, many.second);
}

TEST(Kernels, CalibrateUniformRowHitsK) {
  // Equal distances to k others: the conditional is uniform at any beta.
  const std::vector<double> d2 = {0.0, 4.0, 4.0, 4.0, 4.0};
  std::vector<double> row(5);
  const auto cal = calibrate_row(d2, 0, 4.0, row);
  EXPECT_TRUE(cal.converged);
  EXPECT_NEAR(cal.perplexity, 4.0, 1e-12);
  EXPECT_EQ(row[0], 0.0);
  for (int j = 1; j < 5; ++j) EXPECT_NEAR(row[j], 0.25, 1e-15);
}

TEST(Kernels, AllZeroDistancesNameTheRow) {
  Matrix d2(4, 4, 0.0);
  std::vector<RowCalibration> cal;
  try {
    conditional_affinities(d2, 2.0, cal);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 0"), std::string::npos);
  }
}

}  // namespace
}  // namespace chirpmap::kernels
