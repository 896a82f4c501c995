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

// Pairwise-evaluation statistics: win score, win rate, percentile bootstrap
// and Welch's t-test.

#ifndef DAVIR_EVAL_STATS_HPP
#define DAVIR_EVAL_STATS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace davir {

enum class Outcome { kWin, kLose, kTie };

struct OutcomeRecord {
  std::string question_id;
  Outcome result = Outcome::kTie;
};

Outcome parse_outcome(std::string_view name);
std::string_view to_string(Outcome outcome);

std::vector<OutcomeRecord> read_outcomes(const std::filesystem::path& path);
void write_outcomes(const std::filesystem::path& path, std::span<const OutcomeRecord> outcomes);

struct OutcomeCounts {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t total() const { return wins + losses + ties; }
};

OutcomeCounts count_outcomes(std::span<const OutcomeRecord> outcomes);

/// 1 + (N_win - N_lose) / N_total, in [0, 2]; 1 means parity.
double win_score(std::span<const OutcomeRecord> outcomes);
/// N_win / N_total.
double win_rate(std::span<const OutcomeRecord> outcomes);
/// N_lose / N_total.
double lose_rate(std::span<const OutcomeRecord> outcomes);

enum class EvalMetric { kWinScore, kWinRate };
EvalMetric parse_eval_metric(std::string_view name);
std::string_view to_string(EvalMetric metric);

/// Per-question values whose mean is the metric: win-score maps
/// win/tie/lose to 2/1/0, win-rate maps win to 1 and anything else to 0.
std::vector<double> per_question_values(std::span<const OutcomeRecord> outcomes,
                                        EvalMetric metric);

struct BootstrapReport {
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

/// Means of `n_resamples` resamples (with replacement, size |values|).
/// Values are sorted first, so only the multiset matters. Resample r draws
/// from its own substream (seed, stream, r), which makes the result
/// independent of how resamples are scheduled across `workers` threads.
std::vector<double> bootstrap_distribution(std::span<const double> values,
                                           std::size_t n_resamples, std::uint64_t seed,
                                           std::uint64_t stream = 0, std::size_t workers = 1);

/// Percentile confidence interval for the mean. Requires |values| >= 2,
/// n_resamples >= 100 and level in (0, 1).
BootstrapReport bootstrap_ci(std::span<const double> values, std::size_t n_resamples,
                             double level, std::uint64_t seed, std::size_t workers = 1);

enum class Alternative { kGreater, kLess, kTwoSided };
Alternative parse_alternative(std::string_view name);
std::string_view to_string(Alternative alternative);

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 0.5;
  Alternative alternative = Alternative::kGreater;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// Welch's unequal-variance two-sample t-test. The default alternative is
/// mean_a > mean_b. When both samples have zero variance the statistic is
/// taken as 0 (equal means: p = 0.5 one-sided, 1 two-sided) or +-infinity
/// (different means: p = 0 or 1).
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         Alternative alternative = Alternative::kGreater);

/// One-sided p-value for mean_a > mean_b.
double t_test(std::span<const double> a, std::span<const double> b);

}  // namespace davir

#endif  // DAVIR_EVAL_STATS_HPP
