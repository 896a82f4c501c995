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

#include "davir/preference_objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "davir/error.hpp"
#include "davir/io.hpp"
#include "json.hpp"

namespace davir {

void PreferenceExample::validate() const {
  for (double v : {logp_policy_w, logp_ref_w, logp_policy_l, logp_ref_l}) {
    if (!std::isfinite(v) || v > 0.0)
      throw ValidationError("preference \"" + id + "\": log-probabilities must be finite and <= 0");
  }
  if (len_w < 1 || len_l < 1)
    throw ValidationError("preference \"" + id + "\": response lengths must be >= 1");
}

ObjectiveVariant parse_objective_variant(std::string_view name) {
  if (name == "vanilla") return ObjectiveVariant::kVanilla;
  if (name == "davir") return ObjectiveVariant::kDavir;
  throw std::invalid_argument("unknown objective variant '" + std::string(name) + "'");
}

std::string_view to_string(ObjectiveVariant variant) {
  return variant == ObjectiveVariant::kVanilla ? "vanilla" : "davir";
}

double softplus(double x) {
  // ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|)
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// Per-side coefficient multiplying beta * log-ratio. Also validates.
struct Coefficients {
  double w;
  double l;
};

Coefficients coefficients(const PreferenceExample& ex, ObjectiveVariant variant) {
  ex.validate();
  if (variant == ObjectiveVariant::kVanilla) return {1.0, 1.0};
  if (ex.logp_ref_w == 0.0 || ex.logp_ref_l == 0.0)
    throw DegenerateInputError("preference \"" + ex.id +
                               "\": DavIR-DPO needs non-zero reference log-probabilities");
  return {1.0 / std::abs(ex.logp_ref_w), 1.0 / std::abs(ex.logp_ref_l)};
}

double margin_with(const PreferenceExample& ex, Beta beta, ObjectiveVariant variant) {
  const double rw = ex.logp_policy_w - ex.logp_ref_w;
  const double rl = ex.logp_policy_l - ex.logp_ref_l;
  const double b = beta.value();
  if (variant == ObjectiveVariant::kVanilla) return b * rw - b * rl;
  // Divide rather than multiply by the reciprocal: exact when the
  // denominator is 1, which makes the davir variant coincide bit-for-bit
  // with vanilla in that case.
  return b * rw / std::abs(ex.logp_ref_w) - b * rl / std::abs(ex.logp_ref_l);
}

}  // namespace

double dpo_margin(const PreferenceExample& ex, Beta beta) {
  coefficients(ex, ObjectiveVariant::kVanilla);
  return margin_with(ex, beta, ObjectiveVariant::kVanilla);
}

double davir_dpo_margin(const PreferenceExample& ex, Beta beta) {
  coefficients(ex, ObjectiveVariant::kDavir);
  return margin_with(ex, beta, ObjectiveVariant::kDavir);
}

ObjectiveValue objective(const PreferenceExample& ex, Beta beta, ObjectiveVariant variant) {
  const Coefficients c = coefficients(ex, variant);
  ObjectiveValue v;
  v.margin = margin_with(ex, beta, variant);
  v.loss = softplus(-v.margin);
  // d loss / d z = -(1 - sigmoid(z)) = -sigmoid(-z)
  const double slope = sigmoid(-v.margin);
  v.grad_logp_policy_w = -slope * beta.value() * c.w;
  v.grad_logp_policy_l = slope * beta.value() * c.l;
  return v;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

BatchObjective batch_objective(std::span<const PreferenceExample> examples, Beta beta,
                               ObjectiveVariant variant) {
  if (examples.empty()) throw DegenerateInputError("batch objective needs at least one example");
  std::vector<const PreferenceExample*> sorted;
  sorted.reserve(examples.size());
  for (const auto& ex : examples) sorted.push_back(&ex);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });

  BatchObjective out;
  std::vector<double> loss, margin, gw, gl;
  for (const auto* ex : sorted) {
    const ObjectiveValue v = objective(*ex, beta, variant);
    out.per_example.push_back(v);
    out.ids.push_back(ex->id);
    loss.push_back(v.loss);
    margin.push_back(v.margin);
    gw.push_back(v.grad_logp_policy_w);
    gl.push_back(v.grad_logp_policy_l);
  }
  const double n = static_cast<double>(sorted.size());
  out.mean.loss = pairwise_sum(loss) / n;
  out.mean.margin = pairwise_sum(margin) / n;
  out.mean.grad_logp_policy_w = pairwise_sum(gw) / n;
  out.mean.grad_logp_policy_l = pairwise_sum(gl) / n;
  return out;
}

CorrelationReport length_diff_correlation(std::span<const PreferenceExample> examples,
                                          Beta beta, ObjectiveVariant variant) {
  if (examples.size() < 2)
    throw DegenerateInputError("length-difference correlation needs at least 2 examples");
  std::vector<double> margins, diffs;
  margins.reserve(examples.size());
  diffs.reserve(examples.size());
  for (const auto& ex : examples) {
    margins.push_back(objective(ex, beta, variant).margin);
    diffs.push_back(static_cast<double>(ex.len_w) - static_cast<double>(ex.len_l));
  }
  CorrelationReport report;
  report.statistic_name = std::string(to_string(variant)) + "_margin";
  report.against = "response_length_diff";
  report.n = examples.size();
  report.pearson = pearson(margins, diffs);
  report.spearman = spearman(margins, diffs);
  return report;
}

std::vector<PreferenceExample> read_preferences(const std::filesystem::path& path) {
  using nlohmann::json;
  io::LineReader lines(path);
  std::vector<PreferenceExample> out;
  std::unordered_set<std::string> seen;
  while (auto line = lines.next()) {
    const std::string where = path.string() + ":" + std::to_string(lines.line_number()) + ": ";
    PreferenceExample ex;
    try {
      const json obj = json::parse(*line);
      ex.id = obj.at("id").get<std::string>();
      ex.logp_policy_w = obj.at("logp_policy_w").get<double>();
      ex.logp_ref_w = obj.at("logp_ref_w").get<double>();
      ex.logp_policy_l = obj.at("logp_policy_l").get<double>();
      ex.logp_ref_l = obj.at("logp_ref_l").get<double>();
      ex.len_w = obj.at("len_w").get<std::size_t>();
      ex.len_l = obj.at("len_l").get<std::size_t>();
      ex.validate();
    } catch (const json::exception& e) {
      throw ValidationError(where + "malformed preference record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!seen.insert(ex.id).second) throw ValidationError(where + "duplicate id \"" + ex.id + "\"");
    out.push_back(std::move(ex));
  }
  return out;
}

void write_preferences(const std::filesystem::path& path,
                       std::span<const PreferenceExample> examples) {
  io::AtomicFileWriter writer(path);
  for (const auto& ex : examples) {
    writer.stream() << "{\"id\":" << io::quote_json(ex.id)
                    << ",\"logp_policy_w\":" << io::format_double(ex.logp_policy_w)
                    << ",\"logp_ref_w\":" << io::format_double(ex.logp_ref_w)
                    << ",\"logp_policy_l\":" << io::format_double(ex.logp_policy_l)
                    << ",\"logp_ref_l\":" << io::format_double(ex.logp_ref_l)
                    << ",\"len_w\":" << ex.len_w << ",\"len_l\":" << ex.len_l << "}\n";
  }
  writer.commit();
}

}  // namespace davir
