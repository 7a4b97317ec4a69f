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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and time limits are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "chirpmap/embed.hpp"
#include "chirpmap/eval.hpp"
#include "chirpmap/explain.hpp"
#include "chirpmap/ingest.hpp"
#include "chirpmap/learners.hpp"
#include "chirpmap/pipeline.hpp"
#include "oracles.hpp"

namespace {

using namespace chirpmap;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0.0 || secs <= limit_s;
  const bool pass = v.pass && in_time;
  failures += pass ? 0 : 1;
  const std::string limit = limit_s > 0.0 ? fmt::format(" (limit {:g} s)", limit_s) : "";
  fmt::print("criterion {:2d} {}  {}: {}  [{:.2f} s{}]\n", id, pass ? "PASS" : "FAIL", name,
             v.detail, secs, limit);
  std::fflush(stdout);
}

double knn_purity(const Matrix& y, std::span<const int> labels, std::size_t k) {
  const std::size_t n = y.rows();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(squared_distance(y.row(i), y.row(j)), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    for (std::size_t r = 0; r < k; ++r) agree += labels[d[r].second] == labels[i];
  }
  return static_cast<double>(agree) / static_cast<double>(n * k);
}

// 1. Analytic KL gradient against central differences of kl_divergence.
Verdict gradient_check() {
  constexpr double kTol = 1e-5, kStep = 1e-5;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix x = oracle::normal_matrix(8, 3, seed);
    const Matrix p = embed::symmetrize(embed::conditional_affinities(x, 3.0).p).p;
    const Matrix y = oracle::normal_matrix(8, 2, seed + 100);
    const Matrix g = embed::kl_gradient(p, y);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t k = 0; k < 2; ++k) {
        Matrix up = y, down = y;
        up(i, k) += kStep;
        down(i, k) -= kStep;
        const double fd = (embed::kl_divergence(p, embed::low_dim_similarities(up).q) -
                           embed::kl_divergence(p, embed::low_dim_similarities(down).q)) /
                          (2.0 * kStep);
        worst = std::max(worst, std::abs(g(i, k) - fd) / std::max(std::abs(fd), 1e-6));
      }
    }
  }
  return {worst < kTol, fmt::format("max relative error {:.2e} (tol {:g})", worst, kTol)};
}

// 2. Perplexity calibration on seeded Gaussian data.
Verdict perplexity_check() {
  constexpr double kTol = 1e-3;
  const Matrix x = oracle::normal_matrix(50, 3, 2024);
  double worst = 0.0;
  for (double target : {5.0, 15.0, 30.0}) {
    const auto c = embed::conditional_affinities(x, target);
    for (std::size_t i = 0; i < 50; ++i) {
      worst = std::max(worst, std::abs(oracle::perplexity_of_row(c.p.row(i)) - target));
    }
  }
  return {worst < kTol, fmt::format("max |perplexity - target| {:.2e} (tol {:g})", worst, kTol)};
}

// 3. Three separated blobs under the four weighting scenarios.
Verdict embedding_check() {
  const double side = 10.0;
  const auto blobs = oracle::gaussian_blobs(
      {{0, 0, 0}, {side, 0, 0}, {side / 2, side * std::sqrt(3.0) / 2, 0}}, 50, 1.0, 31);
  ingest::FeatureMatrix raw;
  raw.columns.assign(ingest::kFeatureNames.begin(), ingest::kFeatureNames.end());
  raw.values = blobs.x;
  for (std::size_t i = 0; i < blobs.x.rows(); ++i) raw.ids.push_back(std::to_string(i));
  const auto z = ingest::standardize(raw);

  const ingest::FeatureWeights scenarios[] = {{1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
  embed::TsneConfig cfg;
  cfg.seed = 5;
  bool ok = true;
  std::string detail;
  for (std::size_t s = 0; s < std::size(scenarios); ++s) {
    const auto w = ingest::apply_weights(z, scenarios[s]);
    const double purity = knn_purity(embed::run_tsne(w.values, cfg).coords, blobs.labels, 5);
    const double floor = s == 0 ? 0.95 : 0.90;
    ok = ok && purity >= floor;
    const auto a = scenarios[s].as_array();
    detail += fmt::format("{}[{:g},{:g},{:g}] purity {:.3f} (>= {:.2f})", s ? "; " : "", a[0],
                          a[1], a[2], purity, floor);
  }
  return {ok, detail};
}

double holdout_accuracy(const learners::LabeledPoints& train,
                        const learners::LabeledPoints& test, learners::ClassifierKind kind) {
  learners::ClassifierConfig c;
  c.kind = kind;
  const auto model = learners::fit_classifier(train, c);
  const auto pred = learners::predict(model, test.coords);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == test.labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

learners::LabeledPoints take(const Matrix& x, std::span<const int> y,
                             const std::vector<std::size_t>& idx) {
  learners::LabeledPoints out;
  out.coords = Matrix(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(x.row(idx[r]).begin(), x.cols(), out.coords.row(r).begin());
    out.labels.push_back(y[idx[r]]);
  }
  return out;
}

// 4. Separable two-blob accuracy and chance level on shuffled labels.
Verdict classifier_check() {
  const auto blobs = oracle::two_blob(17);
  bool ok = true;
  std::string detail;
  for (auto kind : learners::kAllClassifiers) {
    const double sep = holdout_accuracy(blobs.train, blobs.test, kind);
    double chance = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      const Matrix x = oracle::normal_matrix(200, 2, 500 + rep);
      std::vector<int> y(200, 0);
      std::fill(y.begin(), y.begin() + 100, 1);
      Rng(900 + rep).shuffle(std::span<int>(y));
      const auto split = eval::holdout_split(y, 0.3, rep);
      chance += holdout_accuracy(take(x, y, split.train), take(x, y, split.test), kind);
    }
    chance /= 10.0;
    ok = ok && sep >= 0.95 && std::abs(chance - 0.5) <= 0.10;
    detail += fmt::format("{}{} {:.3f}/{:.3f}", detail.empty() ? "" : "; ",
                          learners::kind_name(kind), sep, chance);
  }
  return {ok, "separable >= 0.95 / shuffled 0.5 +- 0.1: " + detail};
}

// 5. SMO against a projected-gradient QP oracle.
Verdict svm_check() {
  double worst_obj = 0.0, worst_kkt = 0.0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto b = oracle::gaussian_blobs({{-1, 0}, {1, 0}}, 10, 1.0, seed);
    const learners::LabeledPoints d{b.x, b.labels};
    const learners::SvmConfig cfg;
    const auto m = learners::fit_svm(d, cfg);
    const auto qp = oracle::svm_dual_qp(d.coords, d.labels, cfg.C, m.gamma, true);
    worst_obj = std::max(worst_obj, std::abs(m.dual_objective - qp.objective));
    const double kkt = oracle::kkt_gap(d, m);
    worst_kkt = std::max(worst_kkt, kkt);
    ok = ok && m.converged && kkt < cfg.tol;
  }
  ok = ok && worst_obj <= 1e-3;
  return {ok, fmt::format("max |dual - oracle| {:.2e} (tol 1e-3), max KKT gap {:.2e} (tol 1e-3)",
                          worst_obj, worst_kkt)};
}

// 6. Metrics against per-sample counting.
Verdict metrics_check() {
  Rng rng(6);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(80);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == 1) {
        (pred[i] == 1 ? tp : fn) += 1;
      } else {
        (pred[i] == 1 ? fp : tn) += 1;
      }
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    const auto m = eval::compute_metrics(eval::confusion(truth, pred));
    const bool same = m.accuracy == (tp + tn) / static_cast<double>(n) &&
                      m.precision == precision && m.recall == recall && m.f1 == f1;
    mismatches += same ? 0 : 1;
  }
  return {mismatches == 0, fmt::format("{} of 1000 vectors differ (exact comparison)", mismatches)};
}

// 7. Stratified folds partition the rows with proportional class counts.
Verdict stratification_check() {
  Rng rng(7);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(9));
    const std::size_t pos = static_cast<std::size_t>(k) + rng.below(300);
    const std::size_t neg = static_cast<std::size_t>(k) + rng.below(300);
    std::vector<int> y(pos, 1);
    y.insert(y.end(), neg, 0);
    rng.shuffle(std::span<int>(y));
    const auto folds = eval::stratified_kfold(y, k, rng.next_u64());
    std::vector<int> seen(y.size(), 0);
    for (const auto& f : folds) {
      std::size_t p = 0;
      for (std::size_t i : f) {
        ++seen[i];
        p += y[i] == 1;
      }
      const std::size_t q = f.size() - p;
      const double dp = std::abs(static_cast<double>(p) - static_cast<double>(pos) / k);
      const double dn = std::abs(static_cast<double>(q) - static_cast<double>(neg) / k);
      worst = std::max({worst, dp, dn});
    }
    const bool partition = folds.size() == static_cast<std::size_t>(k) &&
                           std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    bad += partition ? 0 : 1;
  }
  return {bad == 0 && worst <= 1.0,
          fmt::format("{} non-partitions, max |class count - n_c/k| {:.3f} (tol 1)", bad, worst)};
}

// 8. Efficiency, null player and the ordering oracle.
Verdict shapley_check() {
  pipeline::SynthConfig sc;
  sc.n_per_cluster = 50;
  sc.n_clusters = 4;
  const auto recs = pipeline::synthesize(sc, 8);
  const auto z = ingest::standardize(ingest::to_feature_matrix(recs));
  embed::TsneConfig tc;
  tc.seed = 8;
  const auto emb = embed::run_tsne(z.values, tc);
  learners::ForestConfig fc;
  fc.seed = 8;
  const auto reg = explain::fit_coordinate_regressors(z.values, emb.coords, fc);

  double efficiency = 0.0;
  for (std::size_t i = 0; i < z.values.rows(); ++i) {
    for (const auto* forest : {&reg.model_x, &reg.model_y}) {
      const auto a = explain::shapley_values(*forest, z.values.row(i));
      const double sum = std::accumulate(a.phi.begin(), a.phi.end(), a.base);
      efficiency = std::max(efficiency, std::abs(sum - a.prediction));
    }
  }

  // A constant column is never split on.
  Matrix with_null(z.values.rows(), 4);
  for (std::size_t i = 0; i < z.values.rows(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) with_null(i, j) = z.values(i, j);
    with_null(i, 3) = 1.0;
  }
  const auto null_reg = explain::fit_coordinate_regressors(with_null, emb.coords, fc);
  double null_max = 0.0;
  for (std::size_t i = 0; i < with_null.rows(); ++i) {
    null_max = std::max(null_max,
                        std::abs(explain::shapley_values(null_reg.model_x, with_null.row(i)).phi[3]));
  }

  // Fitted trees: both sides sum the same 2^d terms in different orders.
  double ordering = 0.0;
  for (std::size_t t = 0; t < 10; ++t) {
    const auto& tree = reg.model_x.trees[t];
    for (std::size_t i = 0; i < z.values.rows(); i += 10) {
      const auto phi = explain::tree_shapley(tree, z.values.row(i));
      const auto want = oracle::ordering_shapley(tree, z.values.row(i));
      for (std::size_t j = 0; j < 3; ++j) ordering = std::max(ordering, std::abs(phi[j] - want[j]));
    }
  }
  // Dyadic tree: every intermediate is exactly representable.
  learners::DecisionTree dy;
  dy.task = learners::TreeTask::kRegression;
  dy.n_features = 3;
  auto node = [](int f, double thr, int l, int r, double n, double v) {
    learners::TreeNode t;
    t.feature = f;
    t.threshold = thr;
    t.left = l;
    t.right = r;
    t.n_samples = n;
    t.value = {v};
    return t;
  };
  dy.nodes = {node(0, 0.0, 1, 2, 8, 0), node(1, 0.0, 3, 4, 4, 0), node(2, 0.0, 5, 6, 4, 0),
              node(-1, 0, -1, -1, 2, 1.0), node(-1, 0, -1, -1, 2, 3.0),
              node(-1, 0, -1, -1, 2, -2.0), node(-1, 0, -1, -1, 2, 4.0)};
  bool exact = true;
  for (double a : {-1.0, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      for (double c : {-1.0, 1.0}) {
        const std::vector<double> x{a, b, c};
        exact = exact && explain::tree_shapley(dy, x) == oracle::ordering_shapley(dy, x);
      }
    }
  }

  const bool ok = efficiency <= 1e-9 && null_max == 0.0 && ordering <= 1e-12 && exact;
  return {ok, fmt::format("efficiency {:.2e} (tol 1e-9), null player {:g} (exact 0), "
                          "ordering oracle {:.2e} on fitted trees (tol 1e-12), "
                          "dyadic tree exact: {}",
                          efficiency, null_max, ordering, exact ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct EndToEnd {
  fs::path root;
  pipeline::PipelineConfig first, second;
  double first_seconds = 0.0;
  std::string error;
};

EndToEnd run_twice() {
  EndToEnd r;
  r.root = fs::temp_directory_path() / "chirpmap_acceptance";
  fs::remove_all(r.root);
  pipeline::PipelineConfig c;
  c.seed = 2026;
  c.output_dir = r.root / "synth";
  try {
    pipeline::cmd_synth(c);
    c.input = c.output_dir / pipeline::files::kSynth;
    r.first = c;
    r.first.output_dir = r.root / "run1";
    r.second = c;
    r.second.output_dir = r.root / "run2";
    const auto t0 = std::chrono::steady_clock::now();
    pipeline::cmd_pipeline(r.first);
    r.first_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pipeline::cmd_pipeline(r.second);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// 9. Two runs of one config are byte-identical.
Verdict determinism_check(const EndToEnd& e) {
  if (!e.error.empty()) return {false, e.error};
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(e.first.output_dir)) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".json" && ext != ".svg")) continue;
    const auto rel = fs::relative(entry.path(), e.first.output_dir);
    ++compared;
    differing += slurp(entry.path()) == slurp(e.second.output_dir / rel) ? 0 : 1;
  }
  return {compared > 0 && differing == 0,
          fmt::format("{} JSON/SVG files compared, {} differ", compared, differing)};
}

// 10. Every expected artifact exists after one pipeline run.
Verdict end_to_end_check(const EndToEnd& e) {
  if (!e.error.empty()) return {false, e.error};
  const auto expected = pipeline::expected_artifacts(e.first);
  std::size_t missing = 0, boundary = 0, confusion = 0, metrics = 0, sensitivity = 0;
  for (const auto& p : expected) {
    if (!fs::exists(p)) ++missing;
    const auto name = p.filename().string();
    boundary += name.starts_with("fig_boundary_");
    confusion += name.starts_with("fig_confusion_");
    metrics += name.starts_with("fig_metrics_");
    sensitivity += name.starts_with("fig_sensitivity_");
  }
  const bool ok = missing == 0 && boundary == 12 && confusion == 3 && metrics == 3 &&
                  sensitivity == 3 && e.first_seconds < 300.0;
  return {ok, fmt::format("{} artifacts, {} missing; boundary {}, confusion {}, metrics {}, "
                          "sensitivity {}; pipeline {:.1f} s (limit 300 s)",
                          expected.size(), missing, boundary, confusion, metrics, sensitivity,
                          e.first_seconds)};
}

}  // namespace

int main() {
  report(1, "t-SNE gradient", 1.0, gradient_check);
  report(2, "perplexity calibration", 1.0, perplexity_check);
  report(3, "embedding quality", 30.0, embedding_check);
  report(4, "classifier sanity", 60.0, classifier_check);
  report(5, "SVM dual oracle", 0.0, svm_check);
  report(6, "metrics oracle", 0.0, metrics_check);
  report(7, "stratification", 0.0, stratification_check);
  report(8, "Shapley axioms", 0.0, shapley_check);
  const EndToEnd runs = run_twice();
  report(9, "determinism", 0.0, [&] { return determinism_check(runs); });
  report(10, "end-to-end pipeline", 0.0, [&] { return end_to_end_check(runs); });
  fs::remove_all(runs.root);
  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
