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

#include "chirpmap/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/random.hpp"
#include "chirpmap/render.hpp"
#include "chirpmap/viridis.hpp"

namespace chirpmap::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!j.is_object()) throw UsageError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError(fmt::format("config: unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(fmt::format("config: '{}.{}' has the wrong type", where, key));
  }
}

std::string_view label_model_name(LabelModel m) {
  return m == LabelModel::kRandom ? "random" : "cluster";
}

std::string_view features_name(ExplainFeatures f) {
  return f == ExplainFeatures::kStandardized ? "standardized" : "weighted";
}

std::string_view combine_name(explain::CombineRule r) {
  return r == explain::CombineRule::kManhattan ? "manhattan" : "euclidean";
}

json forest_json(const learners::ForestConfig& f) {
  json j = f;
  j.erase("seed");
  return j;
}

// Everything except output_dir, in a canonical form.
json identity_json(const PipelineConfig& c) {
  json tsne = c.tsne;
  tsne.erase("seed");
  json classifiers = json::array();
  for (const auto& cc : c.classifiers) {
    json k = cc;
    if (k.contains("params")) k["params"].erase("seed");
    classifiers.push_back(std::move(k));
  }
  json scenarios = json::array();
  for (auto s : c.scenarios) scenarios.push_back(eval::scenario_name(s));
  return json{
      {"input", c.input.generic_string()},
      {"schema",
       {{"id", c.schema.id},
        {"temporal_duration", c.schema.temporal_duration},
        {"frequency_onset", c.schema.frequency_onset},
        {"spectral_duration", c.schema.spectral_duration},
        {"outcome", c.schema.outcome},
        {"difficulty", c.schema.difficulty},
        {"delimiter", std::string(1, c.schema.delimiter)}}},
      {"subsample", c.subsample},
      {"weights", c.weights.as_array()},
      {"tsne", tsne},
      {"classifiers", classifiers},
      {"scenarios", scenarios},
      {"evaluation", {{"folds", c.folds}, {"holdout_fraction", c.holdout_fraction}}},
      {"explain",
       {{"forest", forest_json(c.explain.forest)},
        {"features", features_name(c.explain.features)},
        {"combine", combine_name(c.explain.combine)}}},
      {"render",
       {{"grid", c.render.grid}, {"width", c.render.width}, {"height", c.render.height}}},
      {"synth",
       {{"n_per_cluster", c.synth.n_per_cluster},
        {"n_clusters", c.synth.n_clusters},
        {"separation", c.synth.separation},
        {"labels", label_model_name(c.synth.labels)}}},
      {"seed", c.seed}};
}

json provenance(const PipelineConfig& c) {
  return {{"config_hash", config_hash(c)}, {"master_seed", c.seed}};
}

std::string svg_provenance(const PipelineConfig& c) {
  return fmt::format("chirpmap config_hash={} master_seed={}", config_hash(c), c.seed);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw UsageError(fmt::format("cannot create output directory '{}': {}",
                                 dir.string(), ec.message()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw UsageError(fmt::format("cannot write '{}'", path.string()));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::ifstream open_artifact(const fs::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(fmt::format("missing {} artifact: {}", what, path.string()));
  }
  return in;
}

json read_json_artifact(const fs::path& path, std::string_view what) {
  auto in = open_artifact(path, what);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{} artifact {} is not valid JSON: {}", what,
                                path.string(), e.what()));
  }
}

std::vector<ingest::ChirpRecord> read_records(const PipelineConfig& c) {
  const fs::path path = c.output_dir / files::kRecords;
  auto in = open_artifact(path, "records");
  return ingest::load_records(in).records;
}

embed::Embedding read_embedding(const PipelineConfig& c) {
  const fs::path path = c.output_dir / files::kEmbedding;
  auto in = open_artifact(path, "embedding");
  return embed::read_embedding_csv(in);
}

void require_aligned(const std::vector<std::string>& a,
                     const std::vector<std::string>& b, std::string_view what) {
  if (a != b) {
    throw DataError(fmt::format(
        "{} rows do not match the embedding; rerun the earlier stages", what));
  }
}

std::vector<learners::ClassifierConfig> stage_classifiers(const PipelineConfig& c) {
  eval::EvalSettings s;
  s.classifiers = c.classifiers;
  auto out = s.effective_classifiers();
  for (auto& cc : out) {
    if (cc.kind == learners::ClassifierKind::kRandomForest) {
      cc.forest.seed = derive_seed(stage_seed(c, "eval"), "rf");
    }
  }
  return out;
}

std::string model_file(eval::Scenario s, learners::ClassifierKind k) {
  return fmt::format("{}_{}.json", eval::scenario_name(s), learners::kind_name(k));
}

std::string boundary_file(eval::Scenario s, learners::ClassifierKind k) {
  return fmt::format("fig_boundary_{}_{}.svg", eval::scenario_name(s),
                     learners::kind_name(k));
}

void note(std::ostream* log, std::string_view stage,
          const std::vector<fs::path>& written) {
  if (log == nullptr) return;
  *log << fmt::format("[{}] wrote {} file(s)\n", stage, written.size());
}

void write_resolved(const PipelineConfig& c) {
  json j = identity_json(c);
  j["config_hash"] = config_hash(c);
  write_text(c.output_dir / files::kResolvedConfig, dump(j));
}

}  // namespace

void PipelineConfig::validate() const {
  ingest::validate(weights);
  if (folds < 2) throw UsageError(fmt::format("config: folds must be >= 2, got {}", folds));
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw UsageError("config: holdout_fraction must lie in (0, 1)");
  }
  if (scenarios.empty()) throw UsageError("config: no scenarios selected");
  std::set<eval::Scenario> seen_s(scenarios.begin(), scenarios.end());
  if (seen_s.size() != scenarios.size()) throw UsageError("config: duplicate scenario");
  std::set<learners::ClassifierKind> seen_k;
  for (const auto& cc : classifiers) seen_k.insert(cc.kind);
  if (seen_k.size() != classifiers.size()) throw UsageError("config: duplicate classifier");
  if (render.grid < 1 || render.grid > 2000) {
    throw UsageError("config: render.grid must lie in [1, 2000]");
  }
  if (render.width < 200 || render.height < 200) {
    throw UsageError("config: render width and height must be >= 200");
  }
  if (synth.n_per_cluster < 1 || synth.n_clusters < 1) {
    throw UsageError("config: synth counts must be positive");
  }
  if (!(std::isfinite(synth.separation) && synth.separation >= 0.0)) {
    throw UsageError("config: synth.separation must be finite and >= 0");
  }
  if (output_dir.empty()) throw UsageError("config: output_dir is empty");
}

PipelineConfig config_from_json(const json& j) {
  check_keys(j,
             {"input", "schema", "subsample", "weights", "tsne", "classifiers",
              "scenarios", "evaluation", "explain", "render", "synth", "output_dir",
              "seed"},
             "config");
  PipelineConfig c;
  c.input = get_or<std::string>(j, "input", "", "config");
  c.subsample = get_or<std::size_t>(j, "subsample", 0, "config");
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string(), "config");
  c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");

  if (j.contains("schema")) {
    const json& s = j.at("schema");
    check_keys(s,
               {"id", "temporal_duration", "frequency_onset", "spectral_duration",
                "outcome", "difficulty", "delimiter"},
               "schema");
    c.schema.id = get_or(s, "id", c.schema.id, "schema");
    c.schema.temporal_duration =
        get_or(s, "temporal_duration", c.schema.temporal_duration, "schema");
    c.schema.frequency_onset = get_or(s, "frequency_onset", c.schema.frequency_onset, "schema");
    c.schema.spectral_duration =
        get_or(s, "spectral_duration", c.schema.spectral_duration, "schema");
    c.schema.outcome = get_or(s, "outcome", c.schema.outcome, "schema");
    c.schema.difficulty = get_or(s, "difficulty", c.schema.difficulty, "schema");
    const auto delim = get_or<std::string>(s, "delimiter", ",", "schema");
    if (delim.size() != 1) throw UsageError("config: schema.delimiter must be one character");
    c.schema.delimiter = delim[0];
  }

  if (j.contains("weights")) {
    const auto w = get_or<std::vector<double>>(j, "weights", {}, "config");
    if (w.size() != 3) throw UsageError("config: weights must have three entries");
    c.weights = {w[0], w[1], w[2]};
  }

  if (j.contains("tsne")) {
    const json& t = j.at("tsne");
    check_keys(t,
               {"perplexity", "n_iterations", "learning_rate", "momentum_early",
                "momentum_late", "momentum_switch_iter", "exaggeration_factor",
                "exaggeration_until_iter", "output_dims"},
               "tsne");
    try {
      c.tsne = t.get<embed::TsneConfig>();
    } catch (const json::exception&) {
      throw UsageError("config: 'tsne' has a field of the wrong type");
    }
  }

  if (j.contains("classifiers")) {
    const json& cl = j.at("classifiers");
    if (cl.is_string() && cl.get<std::string>() == "all") {
      c.classifiers.clear();
    } else if (cl.is_array()) {
      for (const auto& item : cl) {
        learners::ClassifierConfig cc;
        try {
          if (item.is_string()) {
            cc = json{{"kind", item}}.get<learners::ClassifierConfig>();
          } else {
            check_keys(item, {"kind", "params"}, "classifiers[]");
            if (item.contains("params") && item.at("params").contains("seed")) {
              throw UsageError("config: classifier seeds derive from the master seed");
            }
            cc = item.get<learners::ClassifierConfig>();
          }
        } catch (const json::exception&) {
          throw UsageError("config: malformed classifier entry");
        }
        c.classifiers.push_back(cc);
      }
    } else {
      throw UsageError("config: 'classifiers' must be \"all\" or an array");
    }
  }

  if (j.contains("scenarios")) {
    const json& sc = j.at("scenarios");
    if (sc.is_string() && sc.get<std::string>() == "all") {
      // keep the default: all three
    } else if (sc.is_array()) {
      c.scenarios.clear();
      for (const auto& item : sc) {
        const auto s = item.is_string() ? eval::parse_scenario(item.get<std::string>())
                                        : std::nullopt;
        if (!s) throw UsageError(fmt::format("config: unknown scenario {}", item.dump()));
        c.scenarios.push_back(*s);
      }
    } else {
      throw UsageError("config: 'scenarios' must be \"all\" or an array");
    }
  }

  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    check_keys(e, {"folds", "holdout_fraction"}, "evaluation");
    c.folds = get_or(e, "folds", c.folds, "evaluation");
    c.holdout_fraction = get_or(e, "holdout_fraction", c.holdout_fraction, "evaluation");
  }

  if (j.contains("explain")) {
    const json& e = j.at("explain");
    check_keys(e, {"forest", "features", "combine"}, "explain");
    if (e.contains("forest")) {
      const json& f = e.at("forest");
      check_keys(f, {"n_trees", "max_depth", "min_samples_split", "max_features", "bootstrap"},
                 "explain.forest");
      try {
        c.explain.forest = f.get<learners::ForestConfig>();
      } catch (const json::exception&) {
        throw UsageError("config: 'explain.forest' has a field of the wrong type");
      }
    }
    const auto features = get_or<std::string>(e, "features", "weighted", "explain");
    if (features == "weighted") {
      c.explain.features = ExplainFeatures::kWeighted;
    } else if (features == "standardized") {
      c.explain.features = ExplainFeatures::kStandardized;
    } else {
      throw UsageError(fmt::format("config: unknown explain.features '{}'", features));
    }
    const auto combine = get_or<std::string>(e, "combine", "euclidean", "explain");
    if (combine == "euclidean") {
      c.explain.combine = explain::CombineRule::kEuclidean;
    } else if (combine == "manhattan") {
      c.explain.combine = explain::CombineRule::kManhattan;
    } else {
      throw UsageError(fmt::format("config: unknown explain.combine '{}'", combine));
    }
  }

  if (j.contains("render")) {
    const json& r = j.at("render");
    check_keys(r, {"grid", "width", "height"}, "render");
    c.render.grid = get_or(r, "grid", c.render.grid, "render");
    c.render.width = get_or(r, "width", c.render.width, "render");
    c.render.height = get_or(r, "height", c.render.height, "render");
  }

  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s, {"n_per_cluster", "n_clusters", "separation", "labels"}, "synth");
    c.synth.n_per_cluster = get_or(s, "n_per_cluster", c.synth.n_per_cluster, "synth");
    c.synth.n_clusters = get_or(s, "n_clusters", c.synth.n_clusters, "synth");
    c.synth.separation = get_or(s, "separation", c.synth.separation, "synth");
    const auto labels = get_or<std::string>(s, "labels", "cluster", "synth");
    if (labels == "cluster") {
      c.synth.labels = LabelModel::kCluster;
    } else if (labels == "random") {
      c.synth.labels = LabelModel::kRandom;
    } else {
      throw UsageError(fmt::format("config: unknown synth.labels '{}'", labels));
    }
  }
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json j = identity_json(c);
  j["output_dir"] = c.output_dir.generic_string();
  return j;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot read config file '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config file '{}' is not valid JSON: {}", path.string(),
                                 e.what()));
  }
  return config_from_json(j);
}

std::string config_hash(const PipelineConfig& c) {
  return fmt::format("{:016x}", fnv1a64(identity_json(c).dump()));
}

std::uint64_t stage_seed(const PipelineConfig& c, std::string_view stage) {
  return derive_seed(c.seed, stage);
}

std::vector<ingest::ChirpRecord> synthesize(const SynthConfig& config,
                                            std::uint64_t seed) {
  if (config.n_per_cluster < 1 || config.n_clusters < 1) {
    throw UsageError("synthesize: counts must be positive");
  }
  if (!(std::isfinite(config.separation) && config.separation >= 0.0)) {
    throw UsageError("synthesize: separation must be finite and >= 0");
  }
  const std::size_t k_count = config.n_clusters;
  const std::size_t n = k_count * config.n_per_cluster;
  // Centers on a circle in the temporal/frequency plane, adjacent ones
  // `separation` apart; the spectral feature carries noise only.
  const double radius =
      k_count > 1 ? config.separation /
                        (2.0 * std::sin(std::numbers::pi / static_cast<double>(k_count)))
                  : 0.0;
  Rng rng(derive_seed(seed, "features"));
  Rng label_rng(derive_seed(seed, "labels"));
  std::vector<std::array<double, 3>> z(n);
  std::vector<std::size_t> cluster(n);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(k_count);
    for (std::size_t i = 0; i < config.n_per_cluster; ++i) {
      const std::size_t r = k * config.n_per_cluster + i;
      cluster[r] = k;
      z[r] = {radius * std::cos(angle) + rng.normal(),
              radius * std::sin(angle) + rng.normal(), rng.normal()};
    }
  }
  std::array<double, 3> lo{z[0]};
  for (const auto& v : z) {
    for (int f = 0; f < 3; ++f) lo[f] = std::min(lo[f], v[f]);
  }
  // Shift to strictly positive physical units: seconds, Hz, Hz.
  constexpr std::array<double, 3> kScale = {0.5, 8.0, 4.0};
  constexpr int kDifficulty[] = {1, 3, 4, 2};
  std::vector<ingest::ChirpRecord> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& rec = out[r];
    rec.id = fmt::format("syn{:05}", r);
    rec.temporal_duration = kScale[0] * (z[r][0] - lo[0] + 1.0);
    rec.frequency_onset = kScale[1] * (z[r][1] - lo[1] + 1.0);
    rec.spectral_duration = kScale[2] * (z[r][2] - lo[2] + 1.0);
    if (config.labels == LabelModel::kCluster) {
      rec.outcome = static_cast<ingest::Outcome>(cluster[r] % 3);
      rec.difficulty = kDifficulty[cluster[r] % 4];
    } else {
      rec.outcome = static_cast<ingest::Outcome>(label_rng.below(3));
      rec.difficulty = 1 + static_cast<int>(label_rng.below(4));
    }
  }
  return out;
}

void write_feature_csv(std::ostream& out, const ingest::FeatureMatrix& m) {
  out << "id";
  for (const auto& c : m.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < m.values.rows(); ++i) {
    out << m.ids[i];
    for (std::size_t j = 0; j < m.values.cols(); ++j) {
      out << fmt::format(",{}", m.values(i, j));
    }
    out << '\n';
  }
}

ingest::FeatureMatrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ingest::FeatureMatrix m;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "id") throw DataError("feature file header must start with 'id'");
    while (std::getline(header, cell, ',')) m.columns.push_back(cell);
  }
  const std::size_t d = m.columns.size();
  if (d == 0) throw DataError("feature file has no feature columns");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t start = line.find(',');
    if (start == std::string::npos) {
      throw DataError(fmt::format("feature line {} is malformed", line_no));
    }
    m.ids.push_back(line.substr(0, start));
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t b = start + 1;
      std::size_t e = line.find(',', b);
      if ((e == std::string::npos) != (j + 1 == d)) {
        throw DataError(fmt::format("feature line {} has the wrong field count", line_no));
      }
      if (e == std::string::npos) e = line.size();
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + b, line.data() + e, v);
      if (ec != std::errc() || ptr != line.data() + e || !std::isfinite(v)) {
        throw DataError(fmt::format("feature line {} has a bad value", line_no));
      }
      values.push_back(v);
      start = e;
    }
  }
  if (m.ids.empty()) throw DataError("feature file has no rows");
  m.values = Matrix(m.ids.size(), d, std::move(values));
  return m;
}

std::vector<fs::path> cmd_synth(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  const auto records = synthesize(c.synth, stage_seed(c, "synth"));
  std::ostringstream csv;
  ingest::write_records(csv, records);
  const fs::path data = c.output_dir / files::kSynth;
  write_text(data, csv.str());
  const fs::path meta = c.output_dir / "synth.json";
  write_text(meta, dump({{"provenance", provenance(c)},
                         {"rows", records.size()},
                         {"synth", identity_json(c)["synth"]}}));
  std::vector<fs::path> written{data, meta};
  note(log, "synth", written);
  return written;
}

std::vector<fs::path> cmd_ingest(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  if (c.input.empty()) throw UsageError("no input file configured (use --input or 'input')");
  auto loaded = ingest::load_records(c.input, c.schema);
  const std::size_t valid = loaded.records.size();
  auto records = ingest::subsample(loaded.records, c.subsample, stage_seed(c, "ingest"));
  const auto standardized = ingest::standardize(ingest::to_feature_matrix(records));
  const auto weighted = ingest::apply_weights(standardized, c.weights);
  const auto dist = ingest::class_distribution(records);

  std::vector<fs::path> written;
  std::ostringstream buf;
  ingest::write_records(buf, records);
  written.push_back(c.output_dir / files::kRecords);
  write_text(written.back(), buf.str());

  buf.str("");
  write_feature_csv(buf, weighted);
  written.push_back(c.output_dir / files::kFeatures);
  write_text(written.back(), buf.str());

  buf.str("");
  ingest::write_rejection_report(buf, loaded.rejections);
  written.push_back(c.output_dir / files::kRejections);
  write_text(written.back(), buf.str());

  json scaling = json::array();
  for (std::size_t j = 0; j < weighted.columns.size(); ++j) {
    scaling.push_back({{"feature", weighted.columns[j]},
                       {"mean", weighted.scaling[j].mean},
                       {"sd", weighted.scaling[j].sd}});
  }
  json outcome, difficulty;
  for (std::size_t k = 0; k < 3; ++k) {
    outcome[std::string(ingest::kOutcomeCodes[k])] = {
        {"count", dist.outcome_counts[k]}, {"proportion", dist.outcome[k]}};
  }
  for (std::size_t k = 0; k < 4; ++k) {
    difficulty[std::to_string(k + 1)] = {{"count", dist.difficulty_counts[k]},
                                         {"proportion", dist.difficulty[k]}};
  }
  written.push_back(c.output_dir / files::kIngestMeta);
  write_text(written.back(),
             dump({{"provenance", provenance(c)},
                   {"input", c.input.generic_string()},
                   {"input_rows", loaded.input_rows},
                   {"valid_rows", valid},
                   {"rejected_rows", loaded.rejections.size()},
                   {"retained_rows", records.size()},
                   {"subsample_seed", c.subsample > 0 ? json(stage_seed(c, "ingest")) : json()},
                   {"weights", c.weights.as_array()},
                   {"scaling", scaling},
                   {"distribution", {{"outcome", outcome}, {"difficulty", difficulty}}}}));
  write_resolved(c);
  note(log, "ingest", written);
  return written;
}

std::vector<fs::path> cmd_embed(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  auto in = open_artifact(c.output_dir / files::kFeatures, "feature");
  const auto features = read_feature_csv(in);
  embed::TsneConfig config = c.tsne;
  config.seed = stage_seed(c, "embed");
  const auto e = embed::run_tsne(features.values, config, features.ids);

  std::vector<fs::path> written;
  std::ostringstream buf;
  embed::write_embedding_csv(buf, e);
  written.push_back(c.output_dir / files::kEmbedding);
  write_text(written.back(), buf.str());
  json meta = embed::embedding_metadata(e);
  meta["provenance"] = provenance(c);
  written.push_back(c.output_dir / files::kEmbeddingMeta);
  write_text(written.back(), dump(meta));
  write_resolved(c);
  note(log, "embed", written);
  return written;
}

std::vector<fs::path> cmd_eval(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  const auto e = read_embedding(c);
  const auto records = read_records(c);
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.id);
  require_aligned(ids, e.ids, "record");

  eval::EvalSettings settings;
  settings.folds = c.folds;
  settings.holdout_fraction = c.holdout_fraction;
  settings.seed = stage_seed(c, "eval");
  settings.scenarios = c.scenarios;
  settings.classifiers = stage_classifiers(c);
  const auto report = eval::run_all_scenarios(e.coords, records, settings);

  std::vector<fs::path> written;
  json j = eval::report_to_json(report);
  j["provenance"] = provenance(c);
  written.push_back(c.output_dir / files::kReport);
  write_text(written.back(), dump(j));
  for (const auto& sr : report.scenarios) {
    for (const auto& cr : sr.classifiers) {
      written.push_back(c.output_dir / files::kModels / model_file(sr.scenario, cr.config.kind));
      write_text(written.back(),
                 dump({{"provenance", provenance(c)},
                       {"scenario", eval::scenario_name(sr.scenario)},
                       {"trained_on", "holdout train split"},
                       {"model", learners::model_to_json(cr.holdout_model)}}));
    }
  }
  write_resolved(c);
  note(log, "eval", written);
  return written;
}

std::vector<fs::path> cmd_explain(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  const auto e = read_embedding(c);
  ingest::FeatureMatrix features;
  if (c.explain.features == ExplainFeatures::kWeighted) {
    auto in = open_artifact(c.output_dir / files::kFeatures, "feature");
    features = read_feature_csv(in);
  } else {
    features = ingest::standardize(ingest::to_feature_matrix(read_records(c)));
  }
  require_aligned(features.ids, e.ids, "feature");

  learners::ForestConfig forest = c.explain.forest;
  forest.seed = stage_seed(c, "explain");
  const auto regressors = explain::fit_coordinate_regressors(features.values, e.coords, forest);
  const auto map = explain::build_sensitivity_map(regressors, features.values, features.ids,
                                                  features.columns, c.explain.combine);

  std::vector<fs::path> written;
  std::ostringstream buf;
  explain::write_sensitivity_csv(buf, map);
  written.push_back(c.output_dir / files::kSensitivity);
  write_text(written.back(), buf.str());
  json meta = explain::sensitivity_metadata(map, regressors);
  meta["provenance"] = provenance(c);
  meta["features_source"] = features_name(c.explain.features);
  meta["forest"] = forest;
  written.push_back(c.output_dir / files::kSensitivityMeta);
  write_text(written.back(), dump(meta));
  write_resolved(c);
  note(log, "explain", written);
  return written;
}

std::vector<fs::path> cmd_render(const PipelineConfig& c, std::ostream* log) {
  c.validate();
  const auto e = read_embedding(c);
  const auto records = read_records(c);
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.id);
  require_aligned(ids, e.ids, "record");
  const json report = read_json_artifact(c.output_dir / files::kReport, "eval report");
  auto sin = open_artifact(c.output_dir / files::kSensitivity, "sensitivity");
  const auto map = explain::read_sensitivity_csv(sin);
  require_aligned(map.ids, e.ids, "sensitivity");

  const fs::path dir = c.output_dir / files::kFigures;
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& svg) {
    written.push_back(dir / name);
    write_text(written.back(), svg);
  };
  auto spec_for = [&](render::PlotKind kind, std::string title) {
    render::PlotSpec s;
    s.kind = kind;
    s.title = std::move(title);
    s.width = c.render.width;
    s.height = c.render.height;
    s.grid = c.render.grid;
    s.provenance = svg_provenance(c);
    return s;
  };

  const auto dist = ingest::class_distribution(records);
  {
    auto s = spec_for(render::PlotKind::kBars, "Surgical outcome");
    s.x_label = "outcome";
    s.y_label = "share of records (%)";
    emit("fig_bars_outcome.svg", render::render_bars(render::outcome_bars(dist), s));
    s.title = "Case difficulty";
    s.x_label = "difficulty";
    emit("fig_bars_difficulty.svg", render::render_bars(render::difficulty_bars(dist), s));
  }
  {
    std::vector<int> outcome, difficulty;
    for (const auto& r : records) {
      outcome.push_back(static_cast<int>(r.outcome));
      difficulty.push_back(r.difficulty - 1);
    }
    std::vector<render::Category> oc, dc;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto o = static_cast<ingest::Outcome>(k);
      oc.push_back({std::string(ingest::outcome_code(o)), std::string(render::outcome_color(o))});
    }
    for (int k = 0; k < 4; ++k) {
      dc.push_back({fmt::format("Level {}", k + 1), render::viridis_hex(k / 3.0)});
    }
    emit("fig_embedding_outcome.svg",
         render::render_labeled_embedding(e.coords, outcome, oc,
                                          spec_for(render::PlotKind::kScatter,
                                                   "Embedding by outcome")));
    emit("fig_embedding_difficulty.svg",
         render::render_labeled_embedding(e.coords, difficulty, dc,
                                          spec_for(render::PlotKind::kScatter,
                                                   "Embedding by difficulty")));
  }

  const auto classifiers = stage_classifiers(c);
  for (auto s : c.scenarios) {
    const std::string sname(eval::scenario_name(s));
    if (!report.contains("scenarios") || !report["scenarios"].contains(sname)) {
      throw DataError(fmt::format("eval report has no scenario {}; rerun eval", sname));
    }
    const json& sj = report["scenarios"][sname];
    learners::LabeledPoints points{e.coords, eval::encode_scenario(records, s).labels};
    for (const auto& cc : classifiers) {
      const std::string cname(learners::kind_name(cc.kind));
      if (!sj.at("classifiers").contains(cname)) {
        throw DataError(fmt::format("eval report has no {} result for {}; rerun eval",
                                    cname, sname));
      }
      const json mj = read_json_artifact(
          c.output_dir / files::kModels / model_file(s, cc.kind), "model");
      learners::TrainedModel model;
      try {
        model = learners::model_from_json(mj.at("model"));
      } catch (const json::exception& ex) {
        throw DataError(fmt::format("model artifact for {} {} is malformed: {}", sname,
                                    cname, ex.what()));
      }
      auto spec = spec_for(render::PlotKind::kBoundary,
                           fmt::format("{} {}: {}", sname, cname, eval::scenario_rule(s)));
      spec.class_names = {"negative", "positive"};
      emit(boundary_file(s, cc.kind), render::render_boundary(model, points, spec));
    }
    emit(fmt::format("fig_confusion_{}.svg", sname),
         render::render_confusion(render::holdout_confusions(sj),
                                  spec_for(render::PlotKind::kConfusion,
                                           fmt::format("Hold-out confusion, {}", sname))));
    auto ms = spec_for(render::PlotKind::kBars, fmt::format("Classifier metrics, {}", sname));
    ms.y_label = "score";
    ms.x_label = "";
    emit(fmt::format("fig_metrics_{}.svg", sname),
         render::render_metric_bars(render::metric_rows(sj), ms));
  }

  for (std::size_t f = 0; f < map.features.size(); ++f) {
    emit(fmt::format("fig_sensitivity_{}.svg", map.features[f]),
         render::render_sensitivity(
             e.coords, map, f,
             spec_for(render::PlotKind::kSensitivity,
                      fmt::format("Sensitivity: {}", map.features[f]))));
  }
  write_resolved(c);
  note(log, "render", written);
  return written;
}

namespace {

std::vector<fs::path> validate_stage(const PipelineConfig& c, std::ostream*) {
  c.validate();
  return {};
}

}  // namespace

std::vector<fs::path> cmd_pipeline(const PipelineConfig& c, std::ostream* log) {
  if (c.output_dir.empty()) throw UsageError("config: output_dir is empty");
  ensure_dir(c.output_dir);
  std::error_code ec;
  fs::remove(c.output_dir / files::kFailed, ec);

  using Stage = std::vector<fs::path> (*)(const PipelineConfig&, std::ostream*);
  const std::pair<const char*, Stage> stages[] = {{"config", &validate_stage},
                                                  {"ingest", &cmd_ingest},
                                                  {"embed", &cmd_embed},
                                                  {"eval", &cmd_eval},
                                                  {"explain", &cmd_explain},
                                                  {"render", &cmd_render}};
  std::vector<fs::path> written;
  for (const auto& [name, run] : stages) {
    auto fail = [&](const std::exception& e) {
      write_text(c.output_dir / files::kFailed,
                 fmt::format("stage {} failed: {}\n", name, e.what()));
      return fmt::format("{}: {}", name, e.what());
    };
    try {
      const auto out = run(c, log);
      written.insert(written.end(), out.begin(), out.end());
    } catch (const UsageError& e) {
      throw UsageError(fail(e));
    } catch (const DataError& e) {
      throw DataError(fail(e));
    } catch (const NumericError& e) {
      throw NumericError(fail(e));
    } catch (const std::exception& e) {
      throw Error(fail(e));
    }
  }
  // Every stage rewrites the resolved config; report it once.
  const fs::path resolved = c.output_dir / files::kResolvedConfig;
  if (std::find(written.begin(), written.end(), resolved) == written.end()) {
    written.push_back(resolved);
  }
  return written;
}

std::vector<fs::path> expected_artifacts(const PipelineConfig& c) {
  const fs::path& o = c.output_dir;
  std::vector<fs::path> out = {o / files::kRecords,       o / files::kFeatures,
                               o / files::kRejections,    o / files::kIngestMeta,
                               o / files::kEmbedding,     o / files::kEmbeddingMeta,
                               o / files::kReport,        o / files::kSensitivity,
                               o / files::kSensitivityMeta, o / files::kResolvedConfig};
  const fs::path fig = o / files::kFigures;
  for (const char* name : {"fig_bars_outcome.svg", "fig_bars_difficulty.svg",
                           "fig_embedding_outcome.svg", "fig_embedding_difficulty.svg"}) {
    out.push_back(fig / name);
  }
  for (auto s : c.scenarios) {
    for (const auto& cc : stage_classifiers(c)) {
      out.push_back(o / files::kModels / model_file(s, cc.kind));
      out.push_back(fig / boundary_file(s, cc.kind));
    }
    out.push_back(fig / fmt::format("fig_confusion_{}.svg", eval::scenario_name(s)));
    out.push_back(fig / fmt::format("fig_metrics_{}.svg", eval::scenario_name(s)));
  }
  for (auto name : ingest::kFeatureNames) {
    out.push_back(fig / fmt::format("fig_sensitivity_{}.svg", name));
  }
  return out;
}

}  // namespace chirpmap::pipeline
