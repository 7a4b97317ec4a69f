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

// Command-line front end: chirpmap <synth|ingest|embed|eval|explain|render|pipeline>.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/pipeline.hpp"

namespace {

using chirpmap::UsageError;
namespace pl = chirpmap::pipeline;
namespace learners = chirpmap::learners;
namespace eval = chirpmap::eval;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string input;
  std::string weights;
  std::string scenario;
  std::string classifier;
  std::optional<std::size_t> n_per_cluster;
  std::optional<std::size_t> clusters;
  std::optional<double> separation;
  std::string labels;
};

chirpmap::ingest::FeatureWeights parse_weights(const std::string& text) {
  std::vector<double> w;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + end, v);
    if (ec != std::errc() || ptr != text.data() + end) {
      throw UsageError(fmt::format("--weights: cannot parse '{}'", text));
    }
    w.push_back(v);
    start = end + 1;
  }
  if (w.size() != 3) throw UsageError("--weights expects three comma-separated numbers");
  return {w[0], w[1], w[2]};
}

pl::PipelineConfig resolve(const Overrides& o) {
  pl::PipelineConfig c = o.config.empty() ? pl::PipelineConfig{} : pl::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.input.empty()) c.input = o.input;
  if (!o.weights.empty()) c.weights = parse_weights(o.weights);
  if (!o.scenario.empty() && o.scenario != "all") {
    const auto s = eval::parse_scenario(o.scenario);
    if (!s) throw UsageError(fmt::format("--scenario: unknown scenario '{}'", o.scenario));
    c.scenarios = {*s};
  } else if (o.scenario == "all") {
    c.scenarios.assign(std::begin(eval::kAllScenarios), std::end(eval::kAllScenarios));
  }
  if (!o.classifier.empty() && o.classifier != "all") {
    const auto k = learners::parse_kind(o.classifier);
    if (!k) throw UsageError(fmt::format("--classifier: unknown classifier '{}'", o.classifier));
    // Keep hyperparameters from the config file if it configured this kind.
    learners::ClassifierConfig chosen;
    chosen.kind = *k;
    for (const auto& cc : c.classifiers) {
      if (cc.kind == *k) chosen = cc;
    }
    c.classifiers = {chosen};
  }
  if (o.n_per_cluster) c.synth.n_per_cluster = *o.n_per_cluster;
  if (o.clusters) c.synth.n_clusters = *o.clusters;
  if (o.separation) c.synth.separation = *o.separation;
  if (o.labels == "random") {
    c.synth.labels = pl::LabelModel::kRandom;
  } else if (o.labels == "cluster") {
    c.synth.labels = pl::LabelModel::kCluster;
  } else if (!o.labels.empty()) {
    throw UsageError(fmt::format("--labels: expected cluster or random, got '{}'", o.labels));
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chirpmap: chirp feature embedding, classification and attribution"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--input", o.input, "input CSV file");
  app.add_option("--weights", o.weights, "feature weights a,b,c");
  app.add_option("--scenario", o.scenario, "s1|s2|s3|all")
      ->check(CLI::IsMember({"s1", "s2", "s3", "all"}));
  app.add_option("--classifier", o.classifier, "rf|svm|logreg|knn|all")
      ->check(CLI::IsMember({"rf", "svm", "logreg", "knn", "all"}));

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic dataset");
  synth->add_option("--n-per-cluster", o.n_per_cluster, "points per cluster");
  synth->add_option("--clusters", o.clusters, "number of clusters");
  synth->add_option("--separation", o.separation, "center spacing in sd units");
  synth->add_option("--labels", o.labels, "cluster|random")
      ->check(CLI::IsMember({"cluster", "random"}));
  app.add_subcommand("ingest", "validate, standardize and weight the input");
  app.add_subcommand("embed", "run t-SNE on the ingested features");
  app.add_subcommand("eval", "cross-validate classifiers per scenario");
  app.add_subcommand("explain", "Shapley sensitivity of the embedding");
  app.add_subcommand("render", "write SVG figures");
  app.add_subcommand("pipeline", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const pl::PipelineConfig c = resolve(o);
    std::vector<std::filesystem::path> written;
    if (command == "synth") {
      written = pl::cmd_synth(c, &std::cerr);
    } else if (command == "ingest") {
      written = pl::cmd_ingest(c, &std::cerr);
    } else if (command == "embed") {
      written = pl::cmd_embed(c, &std::cerr);
    } else if (command == "eval") {
      written = pl::cmd_eval(c, &std::cerr);
    } else if (command == "explain") {
      written = pl::cmd_explain(c, &std::cerr);
    } else if (command == "render") {
      written = pl::cmd_render(c, &std::cerr);
    } else {
      written = pl::cmd_pipeline(c, &std::cerr);
    }
    for (const auto& p : written) std::cout << p.string() << '\n';
    return 0;
  } catch (const chirpmap::Error& e) {
    std::cerr << "chirpmap " << command << ": error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "chirpmap " << command << ": error: " << e.what() << '\n';
    return 2;
  }
}
