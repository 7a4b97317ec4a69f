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

#ifndef CHIRPMAP_INGEST_HPP
#define CHIRPMAP_INGEST_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chirpmap/matrix.hpp"

namespace chirpmap::ingest {

enum class Outcome { kSuccess = 0, kNoResection = 1, kFailure = 2 };

inline constexpr std::array<std::string_view, 3> kOutcomeCodes = {"S", "NR",
                                                                  "F"};
inline constexpr std::array<std::string_view, 3> kFeatureNames = {
    "temporal_duration", "frequency_onset", "spectral_duration"};

std::string_view outcome_code(Outcome o) noexcept;
std::optional<Outcome> parse_outcome(std::string_view code) noexcept;

// One annotated chirp.
struct ChirpRecord {
  std::string id;
  double temporal_duration = 0.0;  // seconds
  double frequency_onset = 0.0;    // Hz
  double spectral_duration = 0.0;  // Hz, frequency span
  Outcome outcome = Outcome::kSuccess;
  int difficulty = 1;  // 1 (very easy) .. 4 (very difficult)

  std::array<double, 3> features() const noexcept {
    return {temporal_duration, frequency_onset, spectral_duration};
  }
  bool operator==(const ChirpRecord&) const = default;
};

// Maps canonical fields onto header names of an arbitrary export.
struct Schema {
  std::string id = "id";
  std::string temporal_duration = "temporal_duration";
  std::string frequency_onset = "frequency_onset";
  std::string spectral_duration = "spectral_duration";
  std::string outcome = "outcome";
  std::string difficulty = "difficulty";
  char delimiter = ',';
};

struct Rejection {
  std::size_t line = 0;  // 1-based line number in the source file
  std::string id;
  std::string reason;
};

struct LoadResult {
  std::vector<ChirpRecord> records;
  std::vector<Rejection> rejections;
  std::size_t input_rows = 0;
};

// Parses delimiter-separated text with a header row. Rows failing
// validation are reported, never imputed. Throws DataError when the header
// lacks a mapped column or no row survives.
LoadResult load_records(std::istream& in, const Schema& schema = {});
LoadResult load_records(const std::filesystem::path& path,
                        const Schema& schema = {});

// One line per rejected row: "line <n> [id=<id>]: <reason>".
void write_rejection_report(std::ostream& out,
                            const std::vector<Rejection>& rejections);

// Writes records using the canonical header.
void write_records(std::ostream& out, const std::vector<ChirpRecord>& records);

// Seeded, order-preserving subsample of `count` records. Returns the input
// unchanged when count is 0 or not smaller than the input.
std::vector<ChirpRecord> subsample(const std::vector<ChirpRecord>& records,
                                   std::size_t count, std::uint64_t seed);

struct FeatureWeights {
  double temporal = 1.0;
  double frequency = 1.0;
  double spectral = 1.0;

  std::array<double, 3> as_array() const noexcept {
    return {temporal, frequency, spectral};
  }
  bool operator==(const FeatureWeights&) const = default;
};

// Throws UsageError naming apply_weights when a weight is negative or
// non-finite, or when all weights are zero.
void validate(const FeatureWeights& w);

struct ColumnScaling {
  double mean = 0.0;
  double sd = 1.0;
};

struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
  std::vector<ColumnScaling> scaling;  // empty until standardized
  std::optional<FeatureWeights> weights;
};

FeatureMatrix to_feature_matrix(const std::vector<ChirpRecord>& records);

// Population-sd z-scoring per column. Requires >= 2 rows; throws DataError
// naming a constant column.
FeatureMatrix standardize(const FeatureMatrix& raw);

// Multiplies column j by w_j. Expects a standardized 3-column matrix.
FeatureMatrix apply_weights(const FeatureMatrix& standardized,
                            const FeatureWeights& w);

struct ClassDistribution {
  std::size_t total = 0;
  std::array<std::size_t, 3> outcome_counts{};
  std::array<std::size_t, 4> difficulty_counts{};
  std::array<double, 3> outcome{};     // proportions, S / NR / F
  std::array<double, 4> difficulty{};  // proportions, levels 1..4
};

ClassDistribution class_distribution(const std::vector<ChirpRecord>& records);

}  // namespace chirpmap::ingest

#endif  // CHIRPMAP_INGEST_HPP
