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

#include "chirpmap/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "chirpmap/error.hpp"
#include "chirpmap/random.hpp"

namespace chirpmap::ingest {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits one line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

struct ColumnIndex {
  std::size_t id, temporal, frequency, spectral, outcome, difficulty;
};

ColumnIndex resolve_header(const std::vector<std::string>& header,
                           const Schema& schema) {
  auto find = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(fmt::format("header is missing mapped column '{}'", name));
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  return {find(schema.id),        find(schema.temporal_duration),
          find(schema.frequency_onset), find(schema.spectral_duration),
          find(schema.outcome),   find(schema.difficulty)};
}

// Returns an error reason, or empty on success.
std::string parse_feature(const std::vector<std::string>& fields,
                          std::size_t col, const std::string& name,
                          double& out) {
  if (col >= fields.size() || fields[col].empty()) {
    return fmt::format("missing value in column '{}'", name);
  }
  const std::string& text = fields[col];
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return fmt::format("unparseable value '{}' in column '{}'", text, name);
  }
  if (!std::isfinite(v)) {
    return fmt::format("non-finite value in column '{}'", name);
  }
  if (v <= 0.0) {
    return fmt::format("non-positive value in column '{}'", name);
  }
  out = v;
  return {};
}

}  // namespace

std::string_view outcome_code(Outcome o) noexcept {
  return kOutcomeCodes[static_cast<std::size_t>(o)];
}

std::optional<Outcome> parse_outcome(std::string_view code) noexcept {
  for (std::size_t i = 0; i < kOutcomeCodes.size(); ++i) {
    if (code == kOutcomeCodes[i]) return static_cast<Outcome>(i);
  }
  return std::nullopt;
}

LoadResult load_records(std::istream& in, const Schema& schema) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError("input has no header row");
  if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  const ColumnIndex col =
      resolve_header(split_fields(line, schema.delimiter), schema);

  LoadResult result;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    ++result.input_rows;
    const auto fields = split_fields(line, schema.delimiter);

    ChirpRecord rec;
    if (col.id < fields.size()) rec.id = fields[col.id];
    auto reject = [&](std::string reason) {
      result.rejections.push_back({line_no, rec.id, std::move(reason)});
    };
    if (rec.id.empty()) {
      reject(fmt::format("missing value in column '{}'", schema.id));
      continue;
    }
    // Artifacts downstream are plain comma-separated without quoting.
    if (rec.id.find_first_of(",\"\r\n") != std::string::npos) {
      reject("id contains a comma, quote or line break");
      continue;
    }

    std::string reason =
        parse_feature(fields, col.temporal, schema.temporal_duration,
                      rec.temporal_duration);
    if (reason.empty())
      reason = parse_feature(fields, col.frequency, schema.frequency_onset,
                             rec.frequency_onset);
    if (reason.empty())
      reason = parse_feature(fields, col.spectral, schema.spectral_duration,
                             rec.spectral_duration);
    if (!reason.empty()) {
      reject(std::move(reason));
      continue;
    }

    if (col.outcome >= fields.size() || fields[col.outcome].empty()) {
      reject(fmt::format("missing value in column '{}'", schema.outcome));
      continue;
    }
    const auto outcome = parse_outcome(fields[col.outcome]);
    if (!outcome) {
      reject(fmt::format("unknown outcome code '{}'", fields[col.outcome]));
      continue;
    }
    rec.outcome = *outcome;

    if (col.difficulty >= fields.size() || fields[col.difficulty].empty()) {
      reject(fmt::format("missing value in column '{}'", schema.difficulty));
      continue;
    }
    const std::string& dtext = fields[col.difficulty];
    int difficulty = 0;
    auto [ptr, ec] =
        std::from_chars(dtext.data(), dtext.data() + dtext.size(), difficulty);
    if (ec != std::errc() || ptr != dtext.data() + dtext.size()) {
      reject(fmt::format("difficulty '{}' is not an integer", dtext));
      continue;
    }
    if (difficulty < 1 || difficulty > 4) {
      reject(fmt::format("difficulty {} out of range 1..4", difficulty));
      continue;
    }
    rec.difficulty = difficulty;
    result.records.push_back(std::move(rec));
  }

  if (result.records.empty()) throw DataError("zero valid rows");
  return result;
}

LoadResult load_records(const std::filesystem::path& path,
                        const Schema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(fmt::format("cannot read '{}'", path.string()));
  }
  return load_records(in, schema);
}

void write_rejection_report(std::ostream& out,
                            const std::vector<Rejection>& rejections) {
  for (const auto& r : rejections) {
    out << fmt::format("line {} [id={}]: {}\n", r.line, r.id, r.reason);
  }
}

void write_records(std::ostream& out, const std::vector<ChirpRecord>& records) {
  out << "id,temporal_duration,frequency_onset,spectral_duration,outcome,"
         "difficulty\n";
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{}\n", r.id, r.temporal_duration,
                       r.frequency_onset, r.spectral_duration,
                       outcome_code(r.outcome), r.difficulty);
  }
}

std::vector<ChirpRecord> subsample(const std::vector<ChirpRecord>& records,
                                   std::size_t count, std::uint64_t seed) {
  if (count == 0 || count >= records.size()) return records;
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<ChirpRecord> out;
  out.reserve(count);
  for (std::size_t i : idx) out.push_back(records[i]);
  return out;
}

void validate(const FeatureWeights& w) {
  bool any_positive = false;
  for (double v : w.as_array()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw UsageError(fmt::format(
          "apply_weights: weight {} must be a finite nonnegative number", v));
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) {
    throw UsageError("apply_weights: at least one weight must be positive");
  }
}

FeatureMatrix to_feature_matrix(const std::vector<ChirpRecord>& records) {
  FeatureMatrix m;
  m.columns.assign(kFeatureNames.begin(), kFeatureNames.end());
  m.values = Matrix(records.size(), 3);
  m.ids.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    m.ids.push_back(records[i].id);
    const auto f = records[i].features();
    for (std::size_t j = 0; j < 3; ++j) m.values(i, j) = f[j];
  }
  return m;
}

FeatureMatrix standardize(const FeatureMatrix& raw) {
  const std::size_t n = raw.values.rows();
  const std::size_t d = raw.values.cols();
  if (n < 2) throw DataError("standardize: need at least 2 rows");

  FeatureMatrix out = raw;
  out.scaling.assign(d, {});
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += raw.values(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = raw.values(i, j) - mean;
      ss += c * c;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0)) {
      const std::string name =
          j < raw.columns.size() ? raw.columns[j] : fmt::format("#{}", j);
      throw DataError(fmt::format(
          "standardize: constant column '{}' has zero spread", name));
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.values(i, j) = (raw.values(i, j) - mean) / sd;
    }
    out.scaling[j] = {mean, sd};
  }
  return out;
}

FeatureMatrix apply_weights(const FeatureMatrix& standardized,
                            const FeatureWeights& w) {
  validate(w);
  if (standardized.values.cols() != 3) {
    throw UsageError("apply_weights: expected a 3-column feature matrix");
  }
  if (standardized.scaling.empty()) {
    throw UsageError("apply_weights: matrix must be standardized first");
  }
  FeatureMatrix out = standardized;
  const auto ws = w.as_array();
  for (std::size_t i = 0; i < out.values.rows(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) out.values(i, j) *= ws[j];
  }
  out.weights = w;
  return out;
}

ClassDistribution class_distribution(const std::vector<ChirpRecord>& records) {
  if (records.empty()) throw DataError("class_distribution: no records");
  ClassDistribution d;
  d.total = records.size();
  for (const auto& r : records) {
    ++d.outcome_counts[static_cast<std::size_t>(r.outcome)];
    ++d.difficulty_counts[static_cast<std::size_t>(r.difficulty - 1)];
  }
  const double n = static_cast<double>(d.total);
  for (std::size_t i = 0; i < 3; ++i) d.outcome[i] = d.outcome_counts[i] / n;
  for (std::size_t i = 0; i < 4; ++i)
    d.difficulty[i] = d.difficulty_counts[i] / n;
  return d;
}

}  // namespace chirpmap::ingest
