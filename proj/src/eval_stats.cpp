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

#include "davir/eval_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "davir/error.hpp"
#include "davir/io.hpp"
#include "davir/parallel.hpp"
#include "davir/rng.hpp"
#include "davir/special_functions.hpp"
#include "json.hpp"

namespace davir {

Outcome parse_outcome(std::string_view name) {
  if (name == "win") return Outcome::kWin;
  if (name == "lose") return Outcome::kLose;
  if (name == "tie") return Outcome::kTie;
  throw ValidationError("unknown outcome '" + std::string(name) + "' (expected win, lose or tie)");
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kWin: return "win";
    case Outcome::kLose: return "lose";
    case Outcome::kTie: return "tie";
  }
  return "tie";
}

std::vector<OutcomeRecord> read_outcomes(const std::filesystem::path& path) {
  using nlohmann::json;
  io::LineReader lines(path);
  std::vector<OutcomeRecord> out;
  std::unordered_set<std::string> seen;
  while (auto line = lines.next()) {
    const std::string where = path.string() + ":" + std::to_string(lines.line_number()) + ": ";
    OutcomeRecord rec;
    try {
      const json obj = json::parse(*line);
      rec.question_id = obj.at("question_id").get<std::string>();
      rec.result = parse_outcome(obj.at("result").get<std::string>());
    } catch (const json::exception& e) {
      throw ValidationError(where + "malformed outcome record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!seen.insert(rec.question_id).second)
      throw ValidationError(where + "duplicate question_id \"" + rec.question_id + "\"");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_outcomes(const std::filesystem::path& path, std::span<const OutcomeRecord> outcomes) {
  io::AtomicFileWriter writer(path);
  for (const auto& o : outcomes)
    writer.stream() << "{\"question_id\":" << io::quote_json(o.question_id) << ",\"result\":\""
                    << to_string(o.result) << "\"}\n";
  writer.commit();
}

OutcomeCounts count_outcomes(std::span<const OutcomeRecord> outcomes) {
  OutcomeCounts c;
  for (const auto& o : outcomes) {
    switch (o.result) {
      case Outcome::kWin: ++c.wins; break;
      case Outcome::kLose: ++c.losses; break;
      case Outcome::kTie: ++c.ties; break;
    }
  }
  return c;
}

namespace {

OutcomeCounts nonempty_counts(std::span<const OutcomeRecord> outcomes) {
  if (outcomes.empty()) throw DegenerateInputError("no outcomes to evaluate");
  return count_outcomes(outcomes);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

// Linear interpolation between order statistics (R type 7).
double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double win_score(std::span<const OutcomeRecord> outcomes) {
  const auto c = nonempty_counts(outcomes);
  return 1.0 + (static_cast<double>(c.wins) - static_cast<double>(c.losses)) /
                   static_cast<double>(c.total());
}

double win_rate(std::span<const OutcomeRecord> outcomes) {
  const auto c = nonempty_counts(outcomes);
  return static_cast<double>(c.wins) / static_cast<double>(c.total());
}

double lose_rate(std::span<const OutcomeRecord> outcomes) {
  const auto c = nonempty_counts(outcomes);
  return static_cast<double>(c.losses) / static_cast<double>(c.total());
}

EvalMetric parse_eval_metric(std::string_view name) {
  if (name == "win-score" || name == "win_score") return EvalMetric::kWinScore;
  if (name == "win-rate" || name == "win_rate") return EvalMetric::kWinRate;
  throw std::invalid_argument("unknown metric '" + std::string(name) +
                              "' (expected win-score or win-rate)");
}

std::string_view to_string(EvalMetric metric) {
  return metric == EvalMetric::kWinScore ? "win-score" : "win-rate";
}

std::vector<double> per_question_values(std::span<const OutcomeRecord> outcomes,
                                        EvalMetric metric) {
  std::vector<double> v;
  v.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (metric == EvalMetric::kWinRate) {
      v.push_back(o.result == Outcome::kWin ? 1.0 : 0.0);
    } else {
      v.push_back(o.result == Outcome::kWin ? 2.0 : o.result == Outcome::kLose ? 0.0 : 1.0);
    }
  }
  return v;
}

std::vector<double> bootstrap_distribution(std::span<const double> values,
                                           std::size_t n_resamples, std::uint64_t seed,
                                           std::uint64_t stream, std::size_t workers) {
  if (values.size() < 2) throw DegenerateInputError("bootstrap needs at least 2 values");
  if (n_resamples == 0) throw std::invalid_argument("n_resamples must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> stats(n_resamples);
  parallel_for(n_resamples, workers, [&](std::size_t r) {
    Rng rng(seed, stream, r);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sorted[rng.uniform_index(n)];
    stats[r] = s / static_cast<double>(n);
  });
  return stats;
}

BootstrapReport bootstrap_ci(std::span<const double> values, std::size_t n_resamples,
                             double level, std::uint64_t seed, std::size_t workers) {
  if (values.size() < 2) throw DegenerateInputError("bootstrap needs at least 2 values");
  if (n_resamples < 100) throw std::invalid_argument("n_resamples must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto stats = bootstrap_distribution(sorted, n_resamples, seed, 0, workers);
  std::sort(stats.begin(), stats.end());

  BootstrapReport report;
  report.point_estimate = mean_of(sorted);
  const double alpha = 1.0 - level;
  // The interval is widened to contain the point estimate, which only
  // matters for tiny, heavily skewed samples.
  report.ci_low = std::min(quantile_sorted(stats, 0.5 * alpha), report.point_estimate);
  report.ci_high = std::max(quantile_sorted(stats, 1.0 - 0.5 * alpha), report.point_estimate);
  report.level = level;
  report.n_resamples = n_resamples;
  report.seed = seed;
  return report;
}

Alternative parse_alternative(std::string_view name) {
  if (name == "greater") return Alternative::kGreater;
  if (name == "less") return Alternative::kLess;
  if (name == "two-sided" || name == "two_sided") return Alternative::kTwoSided;
  throw std::invalid_argument("unknown alternative '" + std::string(name) + "'");
}

std::string_view to_string(Alternative alternative) {
  switch (alternative) {
    case Alternative::kGreater: return "greater";
    case Alternative::kLess: return "less";
    case Alternative::kTwoSided: return "two-sided";
  }
  return "greater";
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         Alternative alternative) {
  if (a.size() < 2 || b.size() < 2)
    throw DegenerateInputError("t-test needs at least 2 values per sample");
  TTestResult r;
  r.alternative = alternative;
  r.mean_a = mean_of(a);
  r.mean_b = mean_of(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a, r.mean_a) / na;
  const double vb = sample_variance(b, r.mean_b) / nb;
  const double se2 = va + vb;
  const double diff = r.mean_a - r.mean_b;

  if (se2 == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    r.t_statistic = diff == 0.0 ? 0.0 : (diff > 0.0 ? inf : -inf);
    r.degrees_of_freedom = na + nb - 2.0;
  } else {
    r.t_statistic = diff / std::sqrt(se2);
    r.degrees_of_freedom = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  }

  const double t = r.t_statistic;
  if (t == 0.0 && se2 == 0.0) {
    r.p_value = alternative == Alternative::kTwoSided ? 1.0 : 0.5;
    return r;
  }
  const double upper = special::student_t_sf(t, r.degrees_of_freedom);
  switch (alternative) {
    case Alternative::kGreater: r.p_value = upper; break;
    case Alternative::kLess: r.p_value = special::student_t_cdf(t, r.degrees_of_freedom); break;
    case Alternative::kTwoSided:
      r.p_value = std::min(1.0, 2.0 * special::student_t_sf(std::abs(t), r.degrees_of_freedom));
      break;
  }
  return r;
}

double t_test(std::span<const double> a, std::span<const double> b) {
  return welch_t_test(a, b, Alternative::kGreater).p_value;
}

}  // namespace davir
