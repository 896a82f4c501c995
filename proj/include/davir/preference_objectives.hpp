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

// Pairwise preference losses on aggregate log-probabilities.
//
// For a winner w and loser l, with log-ratios
//   r_w = logp_policy_w - logp_ref_w,   r_l = logp_policy_l - logp_ref_l,
// the margin is
//   vanilla:  z = beta * r_w - beta * r_l
//   davir:    z = beta * r_w / |logp_ref_w| - beta * r_l / |logp_ref_l|
// and loss = -ln sigmoid(z) = softplus(-z).
//
// Gradients are taken with respect to the two policy log-probabilities; a
// trainer chains them through its own parameters.

#ifndef DAVIR_PREFERENCE_OBJECTIVES_HPP
#define DAVIR_PREFERENCE_OBJECTIVES_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "davir/length_diagnostics.hpp"
#include "davir/scoring.hpp"

namespace davir {

struct PreferenceExample {
  std::string id;
  double logp_policy_w = 0.0;
  double logp_ref_w = 0.0;
  double logp_policy_l = 0.0;
  double logp_ref_l = 0.0;
  std::size_t len_w = 1;
  std::size_t len_l = 1;

  /// Log-probs finite and <= 0, lengths >= 1. Zero reference log-probs are
  /// checked by the davir variant only.
  void validate() const;
};

enum class ObjectiveVariant { kVanilla, kDavir };

ObjectiveVariant parse_objective_variant(std::string_view name);
std::string_view to_string(ObjectiveVariant variant);

struct ObjectiveValue {
  double loss = 0.0;
  double margin = 0.0;
  double grad_logp_policy_w = 0.0;
  double grad_logp_policy_l = 0.0;
};

/// softplus(x) = ln(1 + e^x) without overflow.
double softplus(double x);
/// Logistic function, stable for large |x|.
double sigmoid(double x);

double dpo_margin(const PreferenceExample& ex, Beta beta);
/// Throws DegenerateInputError when a reference log-prob is zero.
double davir_dpo_margin(const PreferenceExample& ex, Beta beta);

ObjectiveValue objective(const PreferenceExample& ex, Beta beta, ObjectiveVariant variant);

struct BatchObjective {
  ObjectiveValue mean;
  /// Per-example values, ordered by id.
  std::vector<ObjectiveValue> per_example;
  std::vector<std::string> ids;
};

/// Mean over examples with a fixed pairwise summation over id-sorted input,
/// so any permutation of the examples gives the same bits.
BatchObjective batch_objective(std::span<const PreferenceExample> examples, Beta beta,
                               ObjectiveVariant variant);

/// Pearson correlation of the margin against len_w - len_l.
CorrelationReport length_diff_correlation(std::span<const PreferenceExample> examples,
                                          Beta beta, ObjectiveVariant variant);

std::vector<PreferenceExample> read_preferences(const std::filesystem::path& path);
void write_preferences(const std::filesystem::path& path,
                       std::span<const PreferenceExample> examples);

/// Deterministic pairwise sum; shared with other order-sensitive reductions.
double pairwise_sum(std::span<const double> values);

}  // namespace davir

#endif  // DAVIR_PREFERENCE_OBJECTIVES_HPP
