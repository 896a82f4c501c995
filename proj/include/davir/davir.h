/* Copyright 2026 The DavIR Toolkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of libdavir.
 *
 * Conventions:
 *  - Every fallible function returns davir_status. On failure the message is
 *    available from davir_last_error() until the next call on the same
 *    thread.
 *  - Objects are opaque handles created by *_load / *_create style
 *    functions and released with the matching *_free (NULL is accepted).
 *  - Strings returned through `const char**` point into the handle and stay
 *    valid until the handle is freed.
 *  - Output files are written atomically (temporary file + rename).
 */

#ifndef DAVIR_DAVIR_H
#define DAVIR_DAVIR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DAVIR_BUILDING_LIBRARY)
#    define DAVIR_API __declspec(dllexport)
#  else
#    define DAVIR_API __declspec(dllimport)
#  endif
#else
#  define DAVIR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum davir_status {
  DAVIR_OK = 0,
  DAVIR_E_INVALID_ARGUMENT = 1, /* NULL pointer, unknown enum, bad parameter */
  DAVIR_E_VALIDATION = 2,       /* input data violates an invariant */
  DAVIR_E_DEGENERATE = 3,       /* quantity undefined: zero variance, empty input ... */
  DAVIR_E_IO = 4,               /* file could not be read or written */
  DAVIR_E_INTERNAL = 5
} davir_status;

typedef enum davir_aggregation { DAVIR_AGG_SUM = 0, DAVIR_AGG_MEAN = 1 } davir_aggregation;

typedef enum davir_join_policy {
  DAVIR_JOIN_WARN = 0, /* skip unmatched ids and count them */
  DAVIR_JOIN_STRICT = 1
} davir_join_policy;

typedef enum davir_metric {
  DAVIR_METRIC_DAVIR = 0,
  DAVIR_METRIC_RHO_LM = 1,
  DAVIR_METRIC_RANDOM = 2
} davir_metric;

typedef enum davir_direction { DAVIR_HIGHEST = 0, DAVIR_LOWEST = 1 } davir_direction;

typedef enum davir_statistic {
  DAVIR_STAT_LOSS_BASE = 0,
  DAVIR_STAT_LOSS_REF = 1,
  DAVIR_STAT_MEAN_LOSS_BASE = 2,
  DAVIR_STAT_MEAN_ENTROPY_BASE = 3,
  DAVIR_STAT_RHO_LM = 4,
  DAVIR_STAT_DAVIR = 5
} davir_statistic;

typedef enum davir_variant { DAVIR_DPO_VANILLA = 0, DAVIR_DPO_DAVIR = 1 } davir_variant;

typedef enum davir_eval_metric {
  DAVIR_EVAL_WIN_SCORE = 0,
  DAVIR_EVAL_WIN_RATE = 1
} davir_eval_metric;

typedef enum davir_alternative {
  DAVIR_ALT_GREATER = 0,
  DAVIR_ALT_LESS = 1,
  DAVIR_ALT_TWO_SIDED = 2
} davir_alternative;

typedef struct davir_corpus davir_corpus;
typedef struct davir_losses davir_losses;
typedef struct davir_scores davir_scores;
typedef struct davir_ngram davir_ngram;
typedef struct davir_id_list davir_id_list;
typedef struct davir_preferences davir_preferences;
typedef struct davir_outcomes davir_outcomes;

typedef struct davir_join_stats {
  size_t matched;
  size_t missing_losses;
  size_t orphan_losses;
} davir_join_stats;

typedef struct davir_scored_doc {
  const char* id;
  size_t n_tokens;
  double loss_base;
  double loss_ref;
  double rho_lm;
  int has_davir;
  double davir;
  int has_mean_loss_base;
  double mean_loss_base;
  int has_mean_entropy_base;
  double mean_entropy_base;
} davir_scored_doc;

typedef struct davir_correlation {
  double pearson;
  double spearman;
  size_t n;
  size_t excluded;
} davir_correlation;

typedef struct davir_overlap {
  size_t count;
  double fraction;
} davir_overlap;

typedef struct davir_preference {
  double logp_policy_w;
  double logp_ref_w;
  double logp_policy_l;
  double logp_ref_l;
  size_t len_w;
  size_t len_l;
} davir_preference;

typedef struct davir_objective {
  double loss;
  double margin;
  double grad_logp_policy_w;
  double grad_logp_policy_l;
} davir_objective;

typedef struct davir_bootstrap {
  double point_estimate;
  double ci_low;
  double ci_high;
  double level;
  size_t n_resamples;
  uint64_t seed;
} davir_bootstrap;

typedef struct davir_t_test_result {
  double t_statistic;
  double degrees_of_freedom;
  double p_value;
  double mean_a;
  double mean_b;
} davir_t_test_result;

typedef struct davir_mix_stats {
  size_t total;
  size_t renamed;
  size_t dropped_duplicates;
} davir_mix_stats;

/* ---- library ---------------------------------------------------------- */

DAVIR_API const char* davir_version(void);
DAVIR_API const char* davir_last_error(void);
DAVIR_API const char* davir_status_name(davir_status status);

/* ---- corpora ---------------------------------------------------------- */

DAVIR_API davir_status davir_corpus_load(const char* path, davir_corpus** out);
DAVIR_API void davir_corpus_free(davir_corpus* corpus);
DAVIR_API size_t davir_corpus_size(const davir_corpus* corpus);
DAVIR_API davir_status davir_corpus_id(const davir_corpus* corpus, size_t index, const char** id);
DAVIR_API davir_status davir_corpus_write(const davir_corpus* corpus, const char* path);
/* Documents whose id is in `ids`, in id-list order. */
DAVIR_API davir_status davir_corpus_filter(const davir_corpus* corpus, const davir_id_list* ids,
                                           davir_corpus** out);
DAVIR_API davir_status davir_corpus_synthesize(size_t n_docs, size_t min_response,
                                               size_t max_response, uint64_t seed,
                                               davir_corpus** out);

/* ---- toy n-gram language model --------------------------------------- */

/* `alphabet_utf8` (may be NULL) lists extra symbols to include in the
 * vocabulary. */
DAVIR_API davir_status davir_ngram_fit(const davir_corpus* corpus, int order, double lambda,
                                       const char* alphabet_utf8, davir_ngram** out);
DAVIR_API davir_status davir_ngram_finetune(const davir_ngram* base, const davir_corpus* d_full,
                                            double mix_weight, davir_ngram** out);
DAVIR_API davir_status davir_ngram_load(const char* path, davir_ngram** out);
DAVIR_API davir_status davir_ngram_save(const davir_ngram* model, const char* path);
DAVIR_API void davir_ngram_free(davir_ngram* model);
DAVIR_API size_t davir_ngram_vocab_size(const davir_ngram* model);
DAVIR_API int davir_ngram_order(const davir_ngram* model);
/* Per-response-symbol NLLs (response length + 1 values). Call with
 * out == NULL to query the required length in *n. */
DAVIR_API davir_status davir_ngram_score_text(const davir_ngram* model, const char* prompt,
                                              const char* response, double* out, size_t* n);
/* Scores every document and writes a single-model NLL file
 * ({"id","nll","entropy"} per line, id-sorted). */
DAVIR_API davir_status davir_ngram_score_corpus(const davir_ngram* model,
                                                const davir_corpus* corpus, int with_entropy,
                                                size_t workers, const char* path);

/* ---- loss records ------------------------------------------------------ */

/* Combined loss file: {"id","nll_base","nll_ref","entropy_base"?}. */
DAVIR_API davir_status davir_losses_load(const char* path, davir_losses** out);
/* Two single-model NLL files, joined by id. */
DAVIR_API davir_status davir_losses_load_pair(const char* base_path, const char* ref_path,
                                              davir_join_policy policy, davir_losses** out,
                                              davir_join_stats* stats);
DAVIR_API davir_status davir_losses_write(const davir_losses* losses, const char* path);
DAVIR_API void davir_losses_free(davir_losses* losses);
DAVIR_API size_t davir_losses_size(const davir_losses* losses);

/* ---- scoring ----------------------------------------------------------- */

DAVIR_API davir_status davir_aggregate(const double* nll, size_t n, davir_aggregation mode,
                                       double* out);
DAVIR_API davir_status davir_rho_lm_score(double loss_base, double loss_ref, double* out);
DAVIR_API davir_status davir_davir_score(double loss_base, double loss_ref, double* out);
DAVIR_API davir_status davir_implicit_reward(double beta, double loss_base, double loss_policy,
                                             double* out);

/* Joins corpus with losses by id and scores every match (id-sorted). */
DAVIR_API davir_status davir_score_corpus(const davir_corpus* corpus, const davir_losses* losses,
                                          davir_aggregation mode, davir_join_policy policy,
                                          size_t workers, davir_scores** out,
                                          davir_join_stats* stats);
DAVIR_API davir_status davir_scores_load(const char* path, davir_scores** out);
DAVIR_API davir_status davir_scores_write(const davir_scores* scores, const char* path);
DAVIR_API void davir_scores_free(davir_scores* scores);
DAVIR_API size_t davir_scores_size(const davir_scores* scores);
DAVIR_API davir_status davir_scores_get(const davir_scores* scores, size_t index,
                                        davir_scored_doc* out);

/* ---- length diagnostics ----------------------------------------------- */

DAVIR_API davir_status davir_pearson(const double* xs, const double* ys, size_t n, double* out);
DAVIR_API davir_status davir_spearman(const double* xs, const double* ys, size_t n, double* out);
DAVIR_API davir_status davir_length_report(const davir_scores* scores, davir_statistic statistic,
                                           davir_correlation* out);
/* CSV with header rank,n_tokens,id,value; ranks by statistic descending. */
DAVIR_API davir_status davir_rank_profile_write(const davir_scores* scores,
                                                davir_statistic statistic, const char* path);

/* ---- selection --------------------------------------------------------- */

DAVIR_API davir_status davir_select(const davir_scores* scores, davir_metric metric,
                                    davir_direction direction, int64_t k, uint64_t seed,
                                    davir_id_list** out);
DAVIR_API davir_status davir_id_list_load(const char* path, davir_id_list** out);
DAVIR_API davir_status davir_id_list_write(const davir_id_list* ids, const char* path);
DAVIR_API void davir_id_list_free(davir_id_list* ids);
DAVIR_API size_t davir_id_list_size(const davir_id_list* ids);
DAVIR_API davir_status davir_id_list_get(const davir_id_list* ids, size_t index, const char** id);
DAVIR_API davir_status davir_selection_overlap(const davir_id_list* a, const davir_id_list* b,
                                               davir_overlap* out);
/* Runs a JSON mix file and writes the mixed corpus to
 * `output_path` (or the mix file's "output" when NULL). */
DAVIR_API davir_status davir_mix(const char* spec_path, int allow_collision,
                                 const char* output_path, davir_mix_stats* stats);

/* ---- preference objectives -------------------------------------------- */

DAVIR_API davir_status davir_dpo_margin(const davir_preference* ex, double beta,
                                        davir_variant variant, double* out);
DAVIR_API davir_status davir_dpo_objective(const davir_preference* ex, double beta,
                                           davir_variant variant, davir_objective* out);
DAVIR_API davir_status davir_preferences_load(const char* path, davir_preferences** out);
DAVIR_API void davir_preferences_free(davir_preferences* prefs);
DAVIR_API size_t davir_preferences_size(const davir_preferences* prefs);
/* Mean objective; if `per_example_path` is non-NULL also writes one JSONL
 * record per example (id-sorted). */
DAVIR_API davir_status davir_dpo_batch(const davir_preferences* prefs, double beta,
                                       davir_variant variant, davir_objective* mean,
                                       const char* per_example_path);
/* Margins in id order; `out` must hold davir_preferences_size() values. */
DAVIR_API davir_status davir_dpo_margins(const davir_preferences* prefs, double beta,
                                         davir_variant variant, double* out);
DAVIR_API davir_status davir_dpo_length_diff_correlation(const davir_preferences* prefs,
                                                         double beta, davir_variant variant,
                                                         davir_correlation* out);

/* ---- evaluation statistics -------------------------------------------- */

DAVIR_API davir_status davir_outcomes_load(const char* path, davir_outcomes** out);
DAVIR_API void davir_outcomes_free(davir_outcomes* outcomes);
DAVIR_API size_t davir_outcomes_size(const davir_outcomes* outcomes);
DAVIR_API davir_status davir_outcome_counts(const davir_outcomes* outcomes, size_t* wins,
                                            size_t* losses, size_t* ties);
DAVIR_API davir_status davir_win_score(const davir_outcomes* outcomes, double* out);
DAVIR_API davir_status davir_win_rate(const davir_outcomes* outcomes, double* out);
/* `out` must hold davir_outcomes_size() values. */
DAVIR_API davir_status davir_per_question_values(const davir_outcomes* outcomes,
                                                 davir_eval_metric metric, double* out);
DAVIR_API davir_status davir_bootstrap_ci(const double* values, size_t n, size_t n_resamples,
                                          double level, uint64_t seed, size_t workers,
                                          davir_bootstrap* out);
/* `out` must hold n_resamples values. */
DAVIR_API davir_status davir_bootstrap_distribution(const double* values, size_t n,
                                                    size_t n_resamples, uint64_t seed,
                                                    uint64_t stream, size_t workers,
                                                    double* out);
DAVIR_API davir_status davir_t_test(const double* a, size_t na, const double* b, size_t nb,
                                    davir_alternative alternative, davir_t_test_result* out);

#ifdef __cplusplus
}
#endif

#endif /* DAVIR_DAVIR_H */
