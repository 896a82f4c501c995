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

#include "davir/davir.h"

#include <algorithm>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "davir/corpus_io.hpp"
#include "davir/error.hpp"
#include "davir/eval_stats.hpp"
#include "davir/io.hpp"
#include "davir/length_diagnostics.hpp"
#include "davir/preference_objectives.hpp"
#include "davir/scoring.hpp"
#include "davir/selection.hpp"
#include "davir/toy_lm.hpp"
#include "davir/version.hpp"

struct davir_corpus {
  std::vector<davir::Document> docs;
};
struct davir_losses {
  std::vector<davir::TokenLossRecord> records;
};
struct davir_scores {
  std::vector<davir::ScoredDocument> docs;
};
struct davir_ngram {
  davir::toylm::NGramModel model;
};
struct davir_id_list {
  std::vector<std::string> ids;
};
struct davir_preferences {
  std::vector<davir::PreferenceExample> examples;
};
struct davir_outcomes {
  std::vector<davir::OutcomeRecord> records;
};

namespace {

thread_local std::string g_last_error;

davir_status fail(davir_status status, const char* message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
davir_status guard(Body&& body) {
  try {
    g_last_error.clear();
    body();
    return DAVIR_OK;
  } catch (const davir::ValidationError& e) {
    return fail(DAVIR_E_VALIDATION, e.what());
  } catch (const davir::DegenerateInputError& e) {
    return fail(DAVIR_E_DEGENERATE, e.what());
  } catch (const davir::IoError& e) {
    return fail(DAVIR_E_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(DAVIR_E_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DAVIR_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DAVIR_E_INTERNAL, e.what());
  } catch (...) {
    return fail(DAVIR_E_INTERNAL, "unknown error");
  }
}

template <typename... Ptrs>
void require(const Ptrs*... ptrs) {
  if (((ptrs == nullptr) || ...)) throw std::invalid_argument("null pointer argument");
}

davir::AggregationMode to_mode(davir_aggregation m) {
  switch (m) {
    case DAVIR_AGG_SUM: return davir::AggregationMode::kSum;
    case DAVIR_AGG_MEAN: return davir::AggregationMode::kMean;
  }
  throw std::invalid_argument("unknown aggregation mode");
}

davir::JoinPolicy to_policy(davir_join_policy p) {
  switch (p) {
    case DAVIR_JOIN_WARN: return davir::JoinPolicy::kWarnAndSkip;
    case DAVIR_JOIN_STRICT: return davir::JoinPolicy::kStrict;
  }
  throw std::invalid_argument("unknown join policy");
}

davir::LengthStatistic to_statistic(davir_statistic s) {
  switch (s) {
    case DAVIR_STAT_LOSS_BASE: return davir::LengthStatistic::kLossBase;
    case DAVIR_STAT_LOSS_REF: return davir::LengthStatistic::kLossRef;
    case DAVIR_STAT_MEAN_LOSS_BASE: return davir::LengthStatistic::kMeanLossBase;
    case DAVIR_STAT_MEAN_ENTROPY_BASE: return davir::LengthStatistic::kMeanEntropyBase;
    case DAVIR_STAT_RHO_LM: return davir::LengthStatistic::kRhoLm;
    case DAVIR_STAT_DAVIR: return davir::LengthStatistic::kDavir;
  }
  throw std::invalid_argument("unknown statistic");
}

davir::ObjectiveVariant to_variant(davir_variant v) {
  switch (v) {
    case DAVIR_DPO_VANILLA: return davir::ObjectiveVariant::kVanilla;
    case DAVIR_DPO_DAVIR: return davir::ObjectiveVariant::kDavir;
  }
  throw std::invalid_argument("unknown objective variant");
}

davir::PreferenceExample to_example(const davir_preference& p) {
  return {"", p.logp_policy_w, p.logp_ref_w, p.logp_policy_l, p.logp_ref_l, p.len_w, p.len_l};
}

void fill(davir_objective* out, const davir::ObjectiveValue& v) {
  *out = {v.loss, v.margin, v.grad_logp_policy_w, v.grad_logp_policy_l};
}

void fill(davir_correlation* out, const davir::CorrelationReport& r) {
  *out = {r.pearson, r.spearman, r.n, r.excluded};
}

void fill(davir_join_stats* out, const davir::JoinStats& s) {
  if (out) *out = {s.matched, s.missing_losses, s.orphan_losses};
}

std::span<const double> view(const double* p, size_t n) {
  if (n > 0 && p == nullptr) throw std::invalid_argument("null array argument");
  return {p, n};
}

}  // namespace

extern "C" {

const char* davir_version(void) { return davir::kVersion; }

const char* davir_last_error(void) { return g_last_error.c_str(); }

const char* davir_status_name(davir_status status) {
  switch (status) {
    case DAVIR_OK: return "ok";
    case DAVIR_E_INVALID_ARGUMENT: return "invalid_argument";
    case DAVIR_E_VALIDATION: return "validation";
    case DAVIR_E_DEGENERATE: return "degenerate";
    case DAVIR_E_IO: return "io";
    case DAVIR_E_INTERNAL: return "internal";
  }
  return "unknown";
}

// corpora

davir_status davir_corpus_load(const char* path, davir_corpus** out) {
  return guard([&] {
    require(path, out);
    auto c = std::make_unique<davir_corpus>();
    c->docs = davir::read_corpus(path);
    *out = c.release();
  });
}

void davir_corpus_free(davir_corpus* corpus) { delete corpus; }

size_t davir_corpus_size(const davir_corpus* corpus) { return corpus ? corpus->docs.size() : 0; }

davir_status davir_corpus_id(const davir_corpus* corpus, size_t index, const char** id) {
  return guard([&] {
    require(corpus, id);
    if (index >= corpus->docs.size()) throw std::invalid_argument("index out of range");
    *id = corpus->docs[index].id.c_str();
  });
}

davir_status davir_corpus_write(const davir_corpus* corpus, const char* path) {
  return guard([&] {
    require(corpus, path);
    davir::write_corpus(path, corpus->docs);
  });
}

davir_status davir_corpus_filter(const davir_corpus* corpus, const davir_id_list* ids,
                                 davir_corpus** out) {
  return guard([&] {
    require(corpus, ids, out);
    auto c = std::make_unique<davir_corpus>();
    c->docs = davir::filter_corpus(corpus->docs, ids->ids);
    *out = c.release();
  });
}

davir_status davir_corpus_synthesize(size_t n_docs, size_t min_response, size_t max_response,
                                     uint64_t seed, davir_corpus** out) {
  return guard([&] {
    require(out);
    davir::toylm::SynthOptions opts;
    opts.n_docs = n_docs;
    opts.min_response = min_response;
    opts.max_response = max_response;
    opts.seed = seed;
    auto c = std::make_unique<davir_corpus>();
    c->docs = davir::toylm::synthesize_corpus(opts);
    *out = c.release();
  });
}

// toy language model

davir_status davir_ngram_fit(const davir_corpus* corpus, int order, double lambda,
                             const char* alphabet_utf8, davir_ngram** out) {
  return guard([&] {
    require(corpus, out);
    davir::toylm::FitOptions opts;
    opts.order = order;
    opts.smoothing_lambda = lambda;
    if (alphabet_utf8) opts.extra_alphabet = davir::toylm::decode_utf8(alphabet_utf8);
    *out = new davir_ngram{davir::toylm::NGramModel::fit(corpus->docs, opts)};
  });
}

davir_status davir_ngram_finetune(const davir_ngram* base, const davir_corpus* d_full,
                                  double mix_weight, davir_ngram** out) {
  return guard([&] {
    require(base, d_full, out);
    *out = new davir_ngram{base->model.finetune(d_full->docs, mix_weight)};
  });
}

davir_status davir_ngram_load(const char* path, davir_ngram** out) {
  return guard([&] {
    require(path, out);
    *out = new davir_ngram{davir::toylm::NGramModel::load(path)};
  });
}

davir_status davir_ngram_save(const davir_ngram* model, const char* path) {
  return guard([&] {
    require(model, path);
    model->model.save(path);
  });
}

void davir_ngram_free(davir_ngram* model) { delete model; }

size_t davir_ngram_vocab_size(const davir_ngram* model) {
  return model ? model->model.vocab_size() : 0;
}

int davir_ngram_order(const davir_ngram* model) { return model ? model->model.order() : 0; }

davir_status davir_ngram_score_text(const davir_ngram* model, const char* prompt,
                                    const char* response, double* out, size_t* n) {
  return guard([&] {
    require(model, prompt, response, n);
    const davir::Document doc{"", prompt, response, {}};
    const auto nll = model->model.score_nll(doc);
    if (out == nullptr) {
      *n = nll.size();
      return;
    }
    if (*n < nll.size()) throw std::invalid_argument("output buffer too small");
    std::copy(nll.begin(), nll.end(), out);
    *n = nll.size();
  });
}

davir_status davir_ngram_score_corpus(const davir_ngram* model, const davir_corpus* corpus,
                                      int with_entropy, size_t workers, const char* path) {
  return guard([&] {
    require(model, corpus, path);
    const auto records = model->model.score_corpus(corpus->docs, with_entropy != 0, workers);
    davir::write_model_nll(path, records);
  });
}

// losses

davir_status davir_losses_load(const char* path, davir_losses** out) {
  return guard([&] {
    require(path, out);
    auto l = std::make_unique<davir_losses>();
    l->records = davir::read_losses(path);
    *out = l.release();
  });
}

davir_status davir_losses_load_pair(const char* base_path, const char* ref_path,
                                    davir_join_policy policy, davir_losses** out,
                                    davir_join_stats* stats) {
  return guard([&] {
    require(base_path, ref_path, out);
    const auto base = davir::read_model_nll(base_path);
    const auto ref = davir::read_model_nll(ref_path);
    davir::JoinStats js;
    auto l = std::make_unique<davir_losses>();
    l->records = davir::combine_model_nll(base, ref, to_policy(policy), &js);
    fill(stats, js);
    *out = l.release();
  });
}

davir_status davir_losses_write(const davir_losses* losses, const char* path) {
  return guard([&] {
    require(losses, path);
    davir::write_losses(path, losses->records);
  });
}

void davir_losses_free(davir_losses* losses) { delete losses; }

size_t davir_losses_size(const davir_losses* losses) {
  return losses ? losses->records.size() : 0;
}

// scoring

davir_status davir_aggregate(const double* nll, size_t n, davir_aggregation mode, double* out) {
  return guard([&] {
    require(out);
    *out = davir::aggregate(view(nll, n), to_mode(mode));
  });
}

davir_status davir_rho_lm_score(double loss_base, double loss_ref, double* out) {
  return guard([&] {
    require(out);
    *out = davir::rho_lm_score(loss_base, loss_ref);
  });
}

davir_status davir_davir_score(double loss_base, double loss_ref, double* out) {
  return guard([&] {
    require(out);
    *out = davir::davir_score(loss_base, loss_ref);
  });
}

davir_status davir_implicit_reward(double beta, double loss_base, double loss_policy,
                                   double* out) {
  return guard([&] {
    require(out);
    *out = davir::implicit_reward(davir::Beta(beta), loss_base, loss_policy);
  });
}

davir_status davir_score_corpus(const davir_corpus* corpus, const davir_losses* losses,
                                davir_aggregation mode, davir_join_policy policy,
                                size_t workers, davir_scores** out, davir_join_stats* stats) {
  return guard([&] {
    require(corpus, losses, out);
    davir::JoinStats js;
    const auto joined = davir::join_losses(corpus->docs, losses->records, to_policy(policy), &js);
    auto s = std::make_unique<davir_scores>();
    s->docs = davir::score_corpus(joined, to_mode(mode), workers);
    fill(stats, js);
    *out = s.release();
  });
}

davir_status davir_scores_load(const char* path, davir_scores** out) {
  return guard([&] {
    require(path, out);
    auto s = std::make_unique<davir_scores>();
    s->docs = davir::read_scores(path);
    *out = s.release();
  });
}

davir_status davir_scores_write(const davir_scores* scores, const char* path) {
  return guard([&] {
    require(scores, path);
    davir::write_scores(path, scores->docs);
  });
}

void davir_scores_free(davir_scores* scores) { delete scores; }

size_t davir_scores_size(const davir_scores* scores) { return scores ? scores->docs.size() : 0; }

davir_status davir_scores_get(const davir_scores* scores, size_t index, davir_scored_doc* out) {
  return guard([&] {
    require(scores, out);
    if (index >= scores->docs.size()) throw std::invalid_argument("index out of range");
    const auto& d = scores->docs[index];
    *out = {d.id.c_str(),
            d.n_tokens,
            d.loss_base,
            d.loss_ref,
            d.rho_lm,
            d.davir.has_value(),
            d.davir.value_or(0.0),
            d.mean_loss_base.has_value(),
            d.mean_loss_base.value_or(0.0),
            d.mean_entropy_base.has_value(),
            d.mean_entropy_base.value_or(0.0)};
  });
}

// length diagnostics

davir_status davir_pearson(const double* xs, const double* ys, size_t n, double* out) {
  return guard([&] {
    require(out);
    *out = davir::pearson(view(xs, n), view(ys, n));
  });
}

davir_status davir_spearman(const double* xs, const double* ys, size_t n, double* out) {
  return guard([&] {
    require(out);
    *out = davir::spearman(view(xs, n), view(ys, n));
  });
}

davir_status davir_length_report(const davir_scores* scores, davir_statistic statistic,
                                 davir_correlation* out) {
  return guard([&] {
    require(scores, out);
    fill(out, davir::length_report(scores->docs, to_statistic(statistic)));
  });
}

davir_status davir_rank_profile_write(const davir_scores* scores, davir_statistic statistic,
                                      const char* path) {
  return guard([&] {
    require(scores, path);
    davir::write_rank_profile_csv(path,
                                  davir::rank_length_profile(scores->docs, to_statistic(statistic)));
  });
}

// selection

davir_status davir_select(const davir_scores* scores, davir_metric metric,
                          davir_direction direction, int64_t k, uint64_t seed,
                          davir_id_list** out) {
  return guard([&] {
    require(scores, out);
    davir::SelectionSpec spec;
    switch (metric) {
      case DAVIR_METRIC_DAVIR: spec.metric = davir::SelectionMetric::kDavir; break;
      case DAVIR_METRIC_RHO_LM: spec.metric = davir::SelectionMetric::kRhoLm; break;
      case DAVIR_METRIC_RANDOM: spec.metric = davir::SelectionMetric::kRandom; break;
      default: throw std::invalid_argument("unknown selection metric");
    }
    switch (direction) {
      case DAVIR_HIGHEST: spec.direction = davir::SelectionDirection::kHighest; break;
      case DAVIR_LOWEST: spec.direction = davir::SelectionDirection::kLowest; break;
      default: throw std::invalid_argument("unknown selection direction");
    }
    spec.k = k;
    spec.seed = seed;
    *out = new davir_id_list{davir::select(scores->docs, spec)};
  });
}

davir_status davir_id_list_load(const char* path, davir_id_list** out) {
  return guard([&] {
    require(path, out);
    *out = new davir_id_list{davir::read_id_list(path)};
  });
}

davir_status davir_id_list_write(const davir_id_list* ids, const char* path) {
  return guard([&] {
    require(ids, path);
    davir::write_id_list(path, ids->ids);
  });
}

void davir_id_list_free(davir_id_list* ids) { delete ids; }

size_t davir_id_list_size(const davir_id_list* ids) { return ids ? ids->ids.size() : 0; }

davir_status davir_id_list_get(const davir_id_list* ids, size_t index, const char** id) {
  return guard([&] {
    require(ids, id);
    if (index >= ids->ids.size()) throw std::invalid_argument("index out of range");
    *id = ids->ids[index].c_str();
  });
}

davir_status davir_selection_overlap(const davir_id_list* a, const davir_id_list* b,
                                     davir_overlap* out) {
  return guard([&] {
    require(a, b, out);
    const auto o = davir::selection_overlap(a->ids, b->ids);
    *out = {o.count, o.fraction};
  });
}

davir_status davir_mix(const char* spec_path, int allow_collision, const char* output_path,
                       davir_mix_stats* stats) {
  return guard([&] {
    require(spec_path);
    const auto spec = davir::read_mix_spec(spec_path);
    std::filesystem::path output = output_path ? std::filesystem::path(output_path) : spec.output;
    if (output.empty()) throw std::invalid_argument("mix needs an output path");
    davir::MixStats ms;
    const auto docs = davir::mix(spec, allow_collision != 0, &ms);
    davir::write_corpus(output, docs);
    if (stats) *stats = {docs.size(), ms.renamed, ms.dropped_duplicates};
  });
}

// preference objectives

davir_status davir_dpo_margin(const davir_preference* ex, double beta, davir_variant variant,
                              double* out) {
  return guard([&] {
    require(ex, out);
    const auto e = to_example(*ex);
    *out = to_variant(variant) == davir::ObjectiveVariant::kVanilla
               ? davir::dpo_margin(e, davir::Beta(beta))
               : davir::davir_dpo_margin(e, davir::Beta(beta));
  });
}

davir_status davir_dpo_objective(const davir_preference* ex, double beta, davir_variant variant,
                                 davir_objective* out) {
  return guard([&] {
    require(ex, out);
    fill(out, davir::objective(to_example(*ex), davir::Beta(beta), to_variant(variant)));
  });
}

davir_status davir_preferences_load(const char* path, davir_preferences** out) {
  return guard([&] {
    require(path, out);
    *out = new davir_preferences{davir::read_preferences(path)};
  });
}

void davir_preferences_free(davir_preferences* prefs) { delete prefs; }

size_t davir_preferences_size(const davir_preferences* prefs) {
  return prefs ? prefs->examples.size() : 0;
}

davir_status davir_dpo_batch(const davir_preferences* prefs, double beta, davir_variant variant,
                             davir_objective* mean, const char* per_example_path) {
  return guard([&] {
    require(prefs, mean);
    const auto batch =
        davir::batch_objective(prefs->examples, davir::Beta(beta), to_variant(variant));
    if (per_example_path) {
      davir::io::AtomicFileWriter writer(per_example_path);
      for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        const auto& v = batch.per_example[i];
        writer.stream() << "{\"id\":" << davir::io::quote_json(batch.ids[i])
                        << ",\"loss\":" << davir::io::format_double(v.loss)
                        << ",\"margin\":" << davir::io::format_double(v.margin)
                        << ",\"grad_logp_policy_w\":"
                        << davir::io::format_double(v.grad_logp_policy_w)
                        << ",\"grad_logp_policy_l\":"
                        << davir::io::format_double(v.grad_logp_policy_l) << "}\n";
      }
      writer.commit();
    }
    fill(mean, batch.mean);
  });
}

davir_status davir_dpo_margins(const davir_preferences* prefs, double beta,
                               davir_variant variant, double* out) {
  return guard([&] {
    require(prefs, out);
    const auto batch =
        davir::batch_objective(prefs->examples, davir::Beta(beta), to_variant(variant));
    for (std::size_t i = 0; i < batch.per_example.size(); ++i) out[i] = batch.per_example[i].margin;
  });
}

davir_status davir_dpo_length_diff_correlation(const davir_preferences* prefs, double beta,
                                               davir_variant variant, davir_correlation* out) {
  return guard([&] {
    require(prefs, out);
    fill(out, davir::length_diff_correlation(prefs->examples, davir::Beta(beta),
                                             to_variant(variant)));
  });
}

// evaluation statistics

davir_status davir_outcomes_load(const char* path, davir_outcomes** out) {
  return guard([&] {
    require(path, out);
    *out = new davir_outcomes{davir::read_outcomes(path)};
  });
}

void davir_outcomes_free(davir_outcomes* outcomes) { delete outcomes; }

size_t davir_outcomes_size(const davir_outcomes* outcomes) {
  return outcomes ? outcomes->records.size() : 0;
}

davir_status davir_outcome_counts(const davir_outcomes* outcomes, size_t* wins, size_t* losses,
                                  size_t* ties) {
  return guard([&] {
    require(outcomes, wins, losses, ties);
    const auto c = davir::count_outcomes(outcomes->records);
    *wins = c.wins;
    *losses = c.losses;
    *ties = c.ties;
  });
}

davir_status davir_win_score(const davir_outcomes* outcomes, double* out) {
  return guard([&] {
    require(outcomes, out);
    *out = davir::win_score(outcomes->records);
  });
}

davir_status davir_win_rate(const davir_outcomes* outcomes, double* out) {
  return guard([&] {
    require(outcomes, out);
    *out = davir::win_rate(outcomes->records);
  });
}

davir_status davir_per_question_values(const davir_outcomes* outcomes, davir_eval_metric metric,
                                       double* out) {
  return guard([&] {
    require(outcomes, out);
    davir::EvalMetric m;
    switch (metric) {
      case DAVIR_EVAL_WIN_SCORE: m = davir::EvalMetric::kWinScore; break;
      case DAVIR_EVAL_WIN_RATE: m = davir::EvalMetric::kWinRate; break;
      default: throw std::invalid_argument("unknown evaluation metric");
    }
    const auto v = davir::per_question_values(outcomes->records, m);
    std::copy(v.begin(), v.end(), out);
  });
}

davir_status davir_bootstrap_ci(const double* values, size_t n, size_t n_resamples,
                                double level, uint64_t seed, size_t workers,
                                davir_bootstrap* out) {
  return guard([&] {
    require(out);
    const auto r = davir::bootstrap_ci(view(values, n), n_resamples, level, seed, workers);
    *out = {r.point_estimate, r.ci_low, r.ci_high, r.level, r.n_resamples, r.seed};
  });
}

davir_status davir_bootstrap_distribution(const double* values, size_t n, size_t n_resamples,
                                          uint64_t seed, uint64_t stream, size_t workers,
                                          double* out) {
  return guard([&] {
    require(out);
    const auto d =
        davir::bootstrap_distribution(view(values, n), n_resamples, seed, stream, workers);
    std::copy(d.begin(), d.end(), out);
  });
}

davir_status davir_t_test(const double* a, size_t na, const double* b, size_t nb,
                          davir_alternative alternative, davir_t_test_result* out) {
  return guard([&] {
    require(out);
    davir::Alternative alt;
    switch (alternative) {
      case DAVIR_ALT_GREATER: alt = davir::Alternative::kGreater; break;
      case DAVIR_ALT_LESS: alt = davir::Alternative::kLess; break;
      case DAVIR_ALT_TWO_SIDED: alt = davir::Alternative::kTwoSided; break;
      default: throw std::invalid_argument("unknown alternative");
    }
    const auto r = davir::welch_t_test(view(a, na), view(b, nb), alt);
    *out = {r.t_statistic, r.degrees_of_freedom, r.p_value, r.mean_a, r.mean_b};
  });
}

}  // extern "C"
