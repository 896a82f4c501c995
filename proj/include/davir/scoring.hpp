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

// Learnability scores from base/reference losses.
//
//   rho_lm = L_base - L_ref                  (nats)
//   davir  = (L_base - L_ref) / L_base       (dimensionless, <= 1)
//   reward = beta * (L_base - L_policy)
//
// L is the negative log-likelihood of the response given the prompt,
// aggregated over response tokens either by sum (default) or by mean.

#ifndef DAVIR_SCORING_HPP
#define DAVIR_SCORING_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "davir/corpus_io.hpp"

namespace davir {

enum class AggregationMode { kSum, kMean };

AggregationMode parse_aggregation(std::string_view name);
std::string_view to_string(AggregationMode mode);

/// Inverse temperature of the implicit reward. Always strictly positive.
class Beta {
 public:
  explicit Beta(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// Sum or mean of per-token NLLs. Throws DegenerateInputError on an empty
/// array and ValidationError on negative or non-finite entries.
double aggregate(std::span<const double> nll, AggregationMode mode);

double rho_lm_score(double loss_base, double loss_ref);

/// Throws DegenerateInputError when loss_base == 0, ValidationError when
/// either loss is negative or non-finite.
double davir_score(double loss_base, double loss_ref);

double implicit_reward(Beta beta, double loss_base, double loss_policy);

/// One ScoredDocument per joined record, in input order. Documents whose
/// base loss is zero keep their RHO-LM score but carry no DavIR score.
std::vector<ScoredDocument> score_corpus(std::span<const JoinedRecord> joined,
                                         AggregationMode mode, std::size_t workers = 1);

ScoredDocument score_record(const TokenLossRecord& losses, AggregationMode mode);

}  // namespace davir

#endif  // DAVIR_SCORING_HPP
