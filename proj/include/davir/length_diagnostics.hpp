// Copyright 2026 The DavIR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// How strongly does a per-document statistic depend on response length?

#ifndef DAVIR_LENGTH_DIAGNOSTICS_HPP
#define DAVIR_LENGTH_DIAGNOSTICS_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "davir/corpus_io.hpp"

namespace davir {

struct CorrelationReport {
  std::string statistic_name;
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n = 0;
  std::string against;
  /// Documents dropped because the statistic was null for them.
  std::size_t excluded = 0;
};

/// Product-moment correlation. Throws ValidationError on length mismatch,
/// DegenerateInputError on n < 2 or zero variance in either input.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

enum class LengthStatistic {
  kLossBase,
  kLossRef,
  kMeanLossBase,
  kMeanEntropyBase,
  kRhoLm,
  kDavir,
};

LengthStatistic parse_length_statistic(std::string_view name);
std::string_view to_string(LengthStatistic statistic);

/// Value of `statistic` for one document, or nullopt if unavailable.
std::optional<double> statistic_value(const ScoredDocument& doc, LengthStatistic statistic);

/// Correlations of the statistic against n_tokens. A constant statistic
/// throws DegenerateInputError("undefined (constant statistic)").
CorrelationReport length_report(std::span<const ScoredDocument> scored,
                                LengthStatistic statistic);

struct RankLength {
  std::size_t rank = 0;  // 1 = highest statistic
  std::size_t n_tokens = 0;
  std::string id;
  double value = 0.0;
};

/// Documents ordered by statistic descending, ties by id ascending. Null
/// statistics are left out.
std::vector<RankLength> rank_length_profile(std::span<const ScoredDocument> scored,
                                            LengthStatistic statistic);

void write_rank_profile_csv(const std::filesystem::path& path,
                            std::span<const RankLength> profile);
std::vector<RankLength> read_rank_profile_csv(const std::filesystem::path& path);

}  // namespace davir

#endif  // DAVIR_LENGTH_DIAGNOSTICS_HPP
