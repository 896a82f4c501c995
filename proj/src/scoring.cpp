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

#include "davir/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "davir/error.hpp"
#include "davir/parallel.hpp"

namespace davir {

namespace {

void require_loss(double loss, const char* name) {
  if (!std::isfinite(loss) || loss < 0.0)
    throw ValidationError(std::string(name) + " must be finite and non-negative");
}

}  // namespace

AggregationMode parse_aggregation(std::string_view name) {
  if (name == "sum") return AggregationMode::kSum;
  if (name == "mean") return AggregationMode::kMean;
  throw std::invalid_argument("unknown aggregation mode '" + std::string(name) +
                              "' (expected sum or mean)");
}

std::string_view to_string(AggregationMode mode) {
  return mode == AggregationMode::kSum ? "sum" : "mean";
}

Beta::Beta(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("beta must be a positive finite number");
}

double aggregate(std::span<const double> nll, AggregationMode mode) {
  if (nll.empty()) throw DegenerateInputError("cannot aggregate an empty loss array");
  double sum = 0.0;
  for (double v : nll) {
    require_loss(v, "per-token NLL");
    sum += v;
  }
  return mode == AggregationMode::kSum ? sum : sum / static_cast<double>(nll.size());
}

double rho_lm_score(double loss_base, double loss_ref) {
  require_loss(loss_base, "loss_base");
  require_loss(loss_ref, "loss_ref");
  return loss_base - loss_ref;
}

double davir_score(double loss_base, double loss_ref) {
  require_loss(loss_base, "loss_base");
  require_loss(loss_ref, "loss_ref");
  if (loss_base == 0.0)
    throw DegenerateInputError("DavIR score undefined for zero base loss");
  const double d = (loss_base - loss_ref) / loss_base;
  // Only reachable with subnormal base losses.
  if (!std::isfinite(d)) throw DegenerateInputError("DavIR score overflows for this base loss");
  return d;
}

double implicit_reward(Beta beta, double loss_base, double loss_policy) {
  if (!std::isfinite(loss_base) || !std::isfinite(loss_policy))
    throw ValidationError("losses must be finite");
  return beta.value() * (loss_base - loss_policy);
}

ScoredDocument score_record(const TokenLossRecord& losses, AggregationMode mode) {
  losses.validate();
  ScoredDocument s;
  s.id = losses.id;
  s.n_tokens = losses.nll_base.size();
  s.loss_base = aggregate(losses.nll_base, mode);
  s.loss_ref = aggregate(losses.nll_ref, mode);
  s.rho_lm = rho_lm_score(s.loss_base, s.loss_ref);
  if (s.loss_base > 0.0) {
    const double d = (s.loss_base - s.loss_ref) / s.loss_base;
    if (std::isfinite(d)) s.davir = d;
  }
  s.mean_loss_base = aggregate(losses.nll_base, AggregationMode::kMean);
  if (losses.entropy_base)
    s.mean_entropy_base = aggregate(*losses.entropy_base, AggregationMode::kMean);
  return s;
}

std::vector<ScoredDocument> score_corpus(std::span<const JoinedRecord> joined,
                                         AggregationMode mode, std::size_t workers) {
  std::vector<ScoredDocument> out(joined.size());
  parallel_for(joined.size(), workers,
               [&](std::size_t i) { out[i] = score_record(joined[i].losses, mode); });
  // Joined input is normally id-sorted already; sorting here keeps the
  // contract for callers that assemble records themselves.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace davir
