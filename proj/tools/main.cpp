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

// `davir` command-line tool. Every subcommand goes through the C API; this
// file only parses flags, writes reports and records manifests.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "davir/davir.h"
#include "json.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace davir::cli {
namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kUsage = 2, kValidation = 3, kIo = 4 };

struct CliError {
  int exit_code;
  std::string kind;
  std::string message;
};

int exit_code_for(davir_status status) {
  switch (status) {
    case DAVIR_OK: return kOk;
    case DAVIR_E_INVALID_ARGUMENT:
    case DAVIR_E_VALIDATION:
    case DAVIR_E_DEGENERATE: return kValidation;
    case DAVIR_E_IO: return kIo;
    case DAVIR_E_INTERNAL: return kUnexpected;
  }
  return kUnexpected;
}

void check(davir_status status) {
  if (status != DAVIR_OK)
    throw CliError{exit_code_for(status), davir_status_name(status), davir_last_error()};
}

[[noreturn]] void invalid(const std::string& message) {
  throw CliError{kValidation, "invalid_argument", message};
}

template <auto Free>
struct Deleter {
  template <typename T>
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<davir_corpus, Deleter<davir_corpus_free>>;
using Losses = std::unique_ptr<davir_losses, Deleter<davir_losses_free>>;
using Scores = std::unique_ptr<davir_scores, Deleter<davir_scores_free>>;
using Model = std::unique_ptr<davir_ngram, Deleter<davir_ngram_free>>;
using IdList = std::unique_ptr<davir_id_list, Deleter<davir_id_list_free>>;
using Preferences = std::unique_ptr<davir_preferences, Deleter<davir_preferences_free>>;
using Outcomes = std::unique_ptr<davir_outcomes, Deleter<davir_outcomes_free>>;

Corpus load_corpus(const std::string& path) {
  davir_corpus* c = nullptr;
  check(davir_corpus_load(path.c_str(), &c));
  return Corpus(c);
}

Model load_model(const std::string& path) {
  davir_ngram* m = nullptr;
  check(davir_ngram_load(path.c_str(), &m));
  return Model(m);
}

Scores load_scores(const std::string& path) {
  davir_scores* s = nullptr;
  check(davir_scores_load(path.c_str(), &s));
  return Scores(s);
}

Outcomes load_outcomes(const std::string& path) {
  davir_outcomes* o = nullptr;
  check(davir_outcomes_load(path.c_str(), &o));
  return Outcomes(o);
}

void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp(path.string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoFailure("cannot write " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct Options {
  std::string corpus, model, output, losses, base_losses, ref_losses, scores, spec;
  std::string preferences, outcomes, compare, manifest, alphabet, corpus_output;
  std::string profile, per_example, report, ids_a, ids_b;
  std::string aggregation = "sum";
  std::string select_metric = "davir";
  std::string direction = "highest";
  std::string variant = "davir";
  std::string eval_metric = "win-score";
  std::string format = "json";
  std::string t_samples = "bootstrap";
  std::string profile_statistic = "davir";
  std::vector<std::string> statistics{"rho_lm", "davir"};
  int order = 3;
  double lambda = 0.1;
  double mix_weight = 0.9;
  double beta = 0.1;
  double level = 0.95;
  std::int64_t k = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t n_resamples = 1000;
  std::size_t n_docs = 1000;
  std::size_t min_response = 5;
  std::size_t max_response = 500;
  bool entropy = false;
  bool strict = false;
  bool allow_collision = false;
  bool two_sided = false;
};

// Report text goes to `output` (atomically, with a manifest) or stdout.
void emit(const std::string& text, const std::string& output, RunManifest& manifest) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  write_atomic(output, text);
  manifest.add_output(output);
}

davir_statistic parse_statistic(const std::string& s) {
  if (s == "loss_base") return DAVIR_STAT_LOSS_BASE;
  if (s == "loss_ref") return DAVIR_STAT_LOSS_REF;
  if (s == "mean_loss_base") return DAVIR_STAT_MEAN_LOSS_BASE;
  if (s == "mean_entropy_base") return DAVIR_STAT_MEAN_ENTROPY_BASE;
  if (s == "rho_lm") return DAVIR_STAT_RHO_LM;
  if (s == "davir") return DAVIR_STAT_DAVIR;
  invalid("unknown statistic '" + s + "'");
}

davir_variant parse_variant(const std::string& s) {
  return s == "vanilla" ? DAVIR_DPO_VANILLA : DAVIR_DPO_DAVIR;
}

// ---- subcommands --------------------------------------------------------

void cmd_synth(const Options& o, RunManifest& m) {
  davir_corpus* c = nullptr;
  check(davir_corpus_synthesize(o.n_docs, o.min_response, o.max_response, o.seed, &c));
  Corpus corpus(c);
  check(davir_corpus_write(corpus.get(), o.output.c_str()));
  m.set_seed("synth", o.seed);
  m.set_param("n_docs", o.n_docs);
  m.set_param("min_response", o.min_response);
  m.set_param("max_response", o.max_response);
  m.add_output(o.output);
}

void cmd_toylm_fit(const Options& o, RunManifest& m) {
  m.add_input(o.corpus);
  const auto corpus = load_corpus(o.corpus);
  davir_ngram* raw = nullptr;
  check(davir_ngram_fit(corpus.get(), o.order, o.lambda,
                        o.alphabet.empty() ? nullptr : o.alphabet.c_str(), &raw));
  Model model(raw);
  check(davir_ngram_save(model.get(), o.output.c_str()));
  spdlog::info("fitted order-{} model, |V| = {}", o.order, davir_ngram_vocab_size(model.get()));
  m.set_param("order", o.order);
  m.set_param("lambda", o.lambda);
  m.set_param("alphabet", o.alphabet);
  m.add_output(o.output);
}

void cmd_toylm_finetune(const Options& o, RunManifest& m) {
  m.add_input(o.model);
  m.add_input(o.corpus);
  const auto base = load_model(o.model);
  const auto corpus = load_corpus(o.corpus);
  davir_ngram* raw = nullptr;
  check(davir_ngram_finetune(base.get(), corpus.get(), o.mix_weight, &raw));
  Model ref(raw);
  check(davir_ngram_save(ref.get(), o.output.c_str()));
  m.set_param("mix_weight", o.mix_weight);
  m.add_output(o.output);
}

void cmd_toylm_score(const Options& o, RunManifest& m) {
  m.add_input(o.model);
  m.add_input(o.corpus);
  const auto model = load_model(o.model);
  const auto corpus = load_corpus(o.corpus);
  check(davir_ngram_score_corpus(model.get(), corpus.get(), o.entropy ? 1 : 0, o.workers,
                                 o.output.c_str()));
  m.set_param("entropy", o.entropy);
  m.set_workers(o.workers);
  m.add_output(o.output);
}

void log_join(const char* what, const davir_join_stats& s) {
  if (s.missing_losses + s.orphan_losses > 0) {
    spdlog::warn("{}: {} matched, {} without losses, {} orphan loss records skipped", what,
                 s.matched, s.missing_losses, s.orphan_losses);
  } else {
    spdlog::info("{}: {} matched", what, s.matched);
  }
}

void cmd_score(const Options& o, RunManifest& m) {
  const bool combined = !o.losses.empty();
  const bool pair = !o.base_losses.empty() || !o.ref_losses.empty();
  if (combined == pair) invalid("score needs either --losses or both --base-losses and --ref-losses");
  if (pair && (o.base_losses.empty() || o.ref_losses.empty()))
    invalid("--base-losses and --ref-losses must be given together");
  const davir_join_policy policy = o.strict ? DAVIR_JOIN_STRICT : DAVIR_JOIN_WARN;
  const davir_aggregation mode = o.aggregation == "mean" ? DAVIR_AGG_MEAN : DAVIR_AGG_SUM;

  m.add_input(o.corpus);
  const auto corpus = load_corpus(o.corpus);
  davir_losses* raw = nullptr;
  if (combined) {
    m.add_input(o.losses);
    check(davir_losses_load(o.losses.c_str(), &raw));
  } else {
    m.add_input(o.base_losses);
    m.add_input(o.ref_losses);
    davir_join_stats js{};
    check(davir_losses_load_pair(o.base_losses.c_str(), o.ref_losses.c_str(), policy, &raw, &js));
    log_join("base/ref join", js);
  }
  Losses losses(raw);
  davir_scores* sraw = nullptr;
  davir_join_stats js{};
  check(davir_score_corpus(corpus.get(), losses.get(), mode, policy, o.workers, &sraw, &js));
  Scores scores(sraw);
  log_join("corpus/loss join", js);
  check(davir_scores_write(scores.get(), o.output.c_str()));
  m.set_param("aggregation", o.aggregation);
  m.set_param("strict", o.strict);
  m.set_workers(o.workers);
  m.add_output(o.output);
}

void cmd_diagnose(const Options& o, RunManifest& m) {
  m.add_input(o.scores);
  const auto scores = load_scores(o.scores);
  json reports = json::array();
  std::ostringstream csv;
  csv << "statistic,against,pearson,spearman,n,excluded\n";
  for (const auto& name : o.statistics) {
    davir_correlation c{};
    check(davir_length_report(scores.get(), parse_statistic(name), &c));
    reports.push_back({{"statistic_name", name},
                       {"against", "n_tokens"},
                       {"pearson", c.pearson},
                       {"spearman", c.spearman},
                       {"n", c.n},
                       {"excluded", c.excluded}});
    csv << name << ",n_tokens," << json(c.pearson).dump() << "," << json(c.spearman).dump() << ","
        << c.n << "," << c.excluded << "\n";
  }
  if (!o.profile.empty()) {
    check(davir_rank_profile_write(scores.get(), parse_statistic(o.profile_statistic),
                                   o.profile.c_str()));
    m.add_output(o.profile);
    m.set_param("profile_statistic", o.profile_statistic);
  }
  m.set_param("statistics", o.statistics);
  m.set_param("format", o.format);
  emit(o.format == "csv" ? csv.str() : reports.dump(2) + "\n", o.output, m);
}

void cmd_select(const Options& o, RunManifest& m) {
  if (!o.corpus.empty() && o.corpus_output.empty()) invalid("--corpus needs --corpus-output");
  m.add_input(o.scores);
  const auto scores = load_scores(o.scores);
  const davir_metric metric = o.select_metric == "random"   ? DAVIR_METRIC_RANDOM
                              : o.select_metric == "rho_lm" ? DAVIR_METRIC_RHO_LM
                                                            : DAVIR_METRIC_DAVIR;
  const davir_direction direction = o.direction == "lowest" ? DAVIR_LOWEST : DAVIR_HIGHEST;
  davir_id_list* raw = nullptr;
  check(davir_select(scores.get(), metric, direction, o.k, o.seed, &raw));
  IdList ids(raw);
  if (static_cast<std::int64_t>(davir_id_list_size(ids.get())) < o.k)
    spdlog::warn("only {} usable documents for k = {}", davir_id_list_size(ids.get()), o.k);
  check(davir_id_list_write(ids.get(), o.output.c_str()));
  m.add_output(o.output);
  if (!o.corpus.empty()) {
    m.add_input(o.corpus);
    const auto corpus = load_corpus(o.corpus);
    davir_corpus* sub = nullptr;
    check(davir_corpus_filter(corpus.get(), ids.get(), &sub));
    Corpus subset(sub);
    check(davir_corpus_write(subset.get(), o.corpus_output.c_str()));
    m.add_output(o.corpus_output);
  }
  m.set_param("metric", o.select_metric);
  m.set_param("direction", o.direction);
  m.set_param("k", o.k);
  m.set_seed("select", o.seed);
}

void cmd_mix(const Options& o, RunManifest& m) {
  m.add_input(o.spec);
  // Inputs named by the mix file are hashed too; resolution mirrors the library.
  json spec;
  {
    std::ifstream in(o.spec);
    if (!in) throw CliError{kIo, "io", "cannot open " + o.spec};
    try {
      in >> spec;
    } catch (const json::exception& e) {
      throw CliError{kValidation, "validation", o.spec + ": malformed mix spec: " + e.what()};
    }
  }
  const fs::path base = fs::path(o.spec).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::string output = o.output;
  if (output.empty() && spec.is_object() && spec.contains("output") && spec["output"].is_string())
    output = resolve(spec["output"].get<std::string>()).string();
  if (output.empty()) invalid("mix needs --output or an \"output\" entry in the mix file");
  if (spec.is_object() && spec.contains("components") && spec["components"].is_array()) {
    for (const auto& c : spec["components"]) {
      for (const char* key : {"corpus", "scores"}) {
        if (c.is_object() && c.contains(key) && c[key].is_string()) {
          const fs::path p = resolve(c[key].get<std::string>());
          if (fs::exists(p)) m.add_input(p);
        }
      }
    }
  }
  davir_mix_stats stats{};
  check(davir_mix(o.spec.c_str(), o.allow_collision ? 1 : 0, output.c_str(), &stats));
  spdlog::info("mixed {} documents ({} renamed, {} duplicates dropped)", stats.total, stats.renamed,
               stats.dropped_duplicates);
  m.set_param("allow_collision", o.allow_collision);
  m.add_output(output);
}

void cmd_overlap(const Options& o, RunManifest& m) {
  m.add_input(o.ids_a);
  m.add_input(o.ids_b);
  davir_id_list* a = nullptr;
  davir_id_list* b = nullptr;
  check(davir_id_list_load(o.ids_a.c_str(), &a));
  IdList la(a);
  check(davir_id_list_load(o.ids_b.c_str(), &b));
  IdList lb(b);
  davir_overlap ov{};
  check(davir_selection_overlap(la.get(), lb.get(), &ov));
  const json report = {{"size_a", davir_id_list_size(la.get())},
                       {"size_b", davir_id_list_size(lb.get())},
                       {"count", ov.count},
                       {"fraction", ov.fraction}};
  emit(report.dump(2) + "\n", o.output, m);
}

void cmd_dpo(const Options& o, RunManifest& m) {
  m.add_input(o.preferences);
  davir_preferences* raw = nullptr;
  check(davir_preferences_load(o.preferences.c_str(), &raw));
  Preferences prefs(raw);
  const davir_variant variant = parse_variant(o.variant);
  davir_objective mean{};
  check(davir_dpo_batch(prefs.get(), o.beta, variant, &mean,
                        o.per_example.empty() ? nullptr : o.per_example.c_str()));
  if (!o.per_example.empty()) m.add_output(o.per_example);

  std::vector<double> margins(davir_preferences_size(prefs.get()));
  check(davir_dpo_margins(prefs.get(), o.beta, variant, margins.data()));
  std::sort(margins.begin(), margins.end());

  json correlation;
  davir_correlation c{};
  const davir_status s = davir_dpo_length_diff_correlation(prefs.get(), o.beta, variant, &c);
  if (s == DAVIR_OK) {
    correlation = {{"statistic_name", o.variant + "_margin"},
                   {"against", "response_length_diff"},
                   {"pearson", c.pearson},
                   {"spearman", c.spearman},
                   {"n", c.n}};
  } else if (s == DAVIR_E_DEGENERATE) {
    correlation = {{"statistic_name", o.variant + "_margin"},
                   {"against", "response_length_diff"},
                   {"pearson", nullptr},
                   {"spearman", nullptr},
                   {"error", davir_last_error()}};
  } else {
    check(s);
  }

  const json report = {
      {"variant", o.variant},
      {"beta", o.beta},
      {"n", margins.size()},
      {"mean_loss", mean.loss},
      {"mean_margin", mean.margin},
      {"mean_grad_logp_policy_w", mean.grad_logp_policy_w},
      {"mean_grad_logp_policy_l", mean.grad_logp_policy_l},
      {"margin_distribution",
       {{"min", margins.front()},
        {"q25", quantile_sorted(margins, 0.25)},
        {"median", quantile_sorted(margins, 0.5)},
        {"q75", quantile_sorted(margins, 0.75)},
        {"max", margins.back()}}},
      {"length_diff_correlation", correlation},
  };
  m.set_param("beta", o.beta);
  m.set_param("variant", o.variant);
  emit(report.dump(2) + "\n", o.report, m);
}

std::vector<double> question_values(const davir_outcomes* outcomes, davir_eval_metric metric) {
  std::vector<double> v(davir_outcomes_size(outcomes));
  check(davir_per_question_values(outcomes, metric, v.data()));
  return v;
}

void cmd_eval(const Options& o, RunManifest& m) {
  m.add_input(o.outcomes);
  const auto outcomes = load_outcomes(o.outcomes);
  const davir_eval_metric metric =
      o.eval_metric == "win-rate" ? DAVIR_EVAL_WIN_RATE : DAVIR_EVAL_WIN_SCORE;
  std::size_t wins = 0, losses = 0, ties = 0;
  check(davir_outcome_counts(outcomes.get(), &wins, &losses, &ties));
  double value = 0.0;
  check(metric == DAVIR_EVAL_WIN_RATE ? davir_win_rate(outcomes.get(), &value)
                                      : davir_win_score(outcomes.get(), &value));
  json report = {{"metric", o.eval_metric},
                 {"value", value},
                 {"n", wins + losses + ties},
                 {"wins", wins},
                 {"losses", losses},
                 {"ties", ties}};

  const auto values = question_values(outcomes.get(), metric);
  if (o.n_resamples > 0) {
    davir_bootstrap b{};
    check(davir_bootstrap_ci(values.data(), values.size(), o.n_resamples, o.level, o.seed,
                             o.workers, &b));
    report["bootstrap"] = {{"point_estimate", b.point_estimate}, {"ci_low", b.ci_low},
                           {"ci_high", b.ci_high},               {"level", b.level},
                           {"n_resamples", b.n_resamples},       {"seed", b.seed}};
  }

  if (!o.compare.empty()) {
    m.add_input(o.compare);
    const auto other = load_outcomes(o.compare);
    const auto other_values = question_values(other.get(), metric);
    std::vector<double> a = values;
    std::vector<double> b = other_values;
    if (o.t_samples == "bootstrap") {
      if (o.n_resamples == 0) invalid("--t-test-samples bootstrap needs --bootstrap > 0");
      a.assign(o.n_resamples, 0.0);
      b.assign(o.n_resamples, 0.0);
      check(davir_bootstrap_distribution(values.data(), values.size(), o.n_resamples, o.seed, 1,
                                         o.workers, a.data()));
      check(davir_bootstrap_distribution(other_values.data(), other_values.size(), o.n_resamples,
                                         o.seed, 2, o.workers, b.data()));
    }
    davir_t_test_result t{};
    const davir_alternative alt = o.two_sided ? DAVIR_ALT_TWO_SIDED : DAVIR_ALT_GREATER;
    check(davir_t_test(a.data(), a.size(), b.data(), b.size(), alt, &t));
    double other_value = 0.0;
    check(metric == DAVIR_EVAL_WIN_RATE ? davir_win_rate(other.get(), &other_value)
                                        : davir_win_score(other.get(), &other_value));
    report["compare"] = {{"outcomes", o.compare},
                         {"value", other_value},
                         {"t_test",
                          {{"samples", o.t_samples},
                           {"alternative", o.two_sided ? "two-sided" : "greater"},
                           {"t_statistic", t.t_statistic},
                           {"degrees_of_freedom", t.degrees_of_freedom},
                           {"p_value", t.p_value},
                           {"mean_a", t.mean_a},
                           {"mean_b", t.mean_b}}}};
    m.set_param("t_test_samples", o.t_samples);
    m.set_param("two_sided", o.two_sided);
  }
  m.set_param("metric", o.eval_metric);
  m.set_param("n_resamples", o.n_resamples);
  m.set_param("level", o.level);
  m.set_seed("bootstrap", o.seed);
  m.set_workers(o.workers);
  emit(report.dump(2) + "\n", o.output, m);
}

// Refuses to overwrite any input, so no subcommand mutates what it reads.
void check_outputs_distinct(const Options& o) {
  const std::vector<std::string> inputs{o.corpus, o.model, o.losses, o.base_losses, o.ref_losses,
                                        o.scores, o.spec, o.preferences, o.outcomes, o.compare,
                                        o.ids_a, o.ids_b};
  const std::vector<std::string> outputs{o.output, o.corpus_output, o.profile, o.per_example,
                                         o.report};
  for (const auto& out : outputs) {
    if (out.empty() || !fs::exists(out)) continue;
    for (const auto& in : inputs) {
      std::error_code ec;
      if (!in.empty() && fs::equivalent(out, in, ec))
        invalid("output " + out + " would overwrite input " + in);
    }
  }
}

int run(std::vector<std::string> args, bool allow_rerun);

void cmd_rerun(const Options& o) {
  json manifest;
  {
    std::ifstream in(o.manifest);
    if (!in) throw CliError{kIo, "io", "cannot open " + o.manifest};
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw CliError{kValidation, "validation", o.manifest + ": malformed manifest: " + e.what()};
    }
  }
  if (manifest.value("tool", "") != "davir" || !manifest.contains("argv"))
    throw CliError{kValidation, "validation", o.manifest + ": not a davir run manifest"};
  for (const auto& input : manifest.at("inputs")) {
    const std::string path = input.at("path").get<std::string>();
    if (!fs::exists(path)) throw CliError{kIo, "io", "recorded input " + path + " is missing"};
    if (sha256_file(path) != input.at("sha256").get<std::string>())
      throw CliError{kValidation, "validation", "recorded input " + path + " has changed"};
  }
  const auto argv = manifest.at("argv").get<std::vector<std::string>>();
  const int code = run(argv, false);
  if (code != kOk) throw CliError{code, "rerun_failed", "replayed command exited with " + std::to_string(code)};

  bool reproduced = true;
  json outputs = json::array();
  for (const auto& output : manifest.at("outputs")) {
    const std::string path = output.at("path").get<std::string>();
    const std::string expected = output.at("sha256").get<std::string>();
    const std::string actual = sha256_file(path);
    reproduced = reproduced && actual == expected;
    outputs.push_back({{"path", path}, {"expected", expected}, {"actual", actual},
                       {"identical", actual == expected}});
  }
  std::cout << json({{"reproduced", reproduced}, {"outputs", outputs}}).dump() << "\n";
  if (!reproduced)
    throw CliError{kValidation, "not_reproduced", "rerun produced different output bytes"};
}

void report_error(const CliError& e) {
  std::cerr << json({{"error", e.kind}, {"message", e.message}, {"exit_code", e.exit_code}}).dump()
            << std::endl;
}

int run(std::vector<std::string> args, bool allow_rerun) {
  CLI::App app{"DavIR core-set selection toolkit", "davir"};
  app.set_version_flag("--version", std::string(davir_version()));
  app.require_subcommand(1);
  Options o;

  const auto positive = CLI::PositiveNumber;
  auto add_workers = [&](CLI::App* sub) {
    sub->add_option("--workers", o.workers, "worker threads (output is identical for any value)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
  };

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic corpus");
  synth->add_option("--n-docs", o.n_docs)->check(positive);
  synth->add_option("--min-response", o.min_response)->check(positive);
  synth->add_option("--max-response", o.max_response)->check(positive);
  synth->add_option("--seed", o.seed);
  synth->add_option("--output", o.output)->required();

  auto* fit = app.add_subcommand("toylm-fit", "fit the character n-gram base model");
  fit->add_option("--corpus", o.corpus)->required();
  fit->add_option("--order", o.order);
  fit->add_option("--lambda", o.lambda, "add-lambda smoothing");
  fit->add_option("--alphabet", o.alphabet, "extra symbols to include in the vocabulary");
  fit->add_option("--output", o.output)->required();

  auto* finetune = app.add_subcommand("toylm-finetune", "interpolate a model with new counts");
  finetune->add_option("--model", o.model)->required();
  finetune->add_option("--corpus", o.corpus)->required();
  finetune->add_option("--mix-weight", o.mix_weight);
  finetune->add_option("--output", o.output)->required();

  auto* tscore = app.add_subcommand("toylm-score", "per-token NLL dump for a corpus");
  tscore->add_option("--model", o.model)->required();
  tscore->add_option("--corpus", o.corpus)->required();
  tscore->add_flag("--entropy", o.entropy, "also emit per-position entropies");
  add_workers(tscore);
  tscore->add_option("--output", o.output)->required();

  auto* score = app.add_subcommand("score", "aggregate losses into RHO-LM and DavIR scores");
  score->add_option("--corpus", o.corpus)->required();
  score->add_option("--losses", o.losses, "combined loss file");
  score->add_option("--base-losses", o.base_losses, "single-model NLL file for the base model");
  score->add_option("--ref-losses", o.ref_losses, "single-model NLL file for the reference model");
  score->add_option("--aggregation", o.aggregation)->check(CLI::IsMember({"sum", "mean"}));
  score->add_flag("--strict", o.strict, "unmatched ids are errors");
  add_workers(score);
  score->add_option("--output", o.output)->required();

  auto* diagnose = app.add_subcommand("diagnose", "length correlation of per-document statistics");
  const std::vector<std::string> statistics{"loss_base",         "loss_ref", "mean_loss_base",
                                            "mean_entropy_base", "rho_lm",   "davir"};
  diagnose->add_option("--scores", o.scores)->required();
  diagnose->add_option("--statistic", o.statistics)->check(CLI::IsMember(statistics));
  diagnose->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}));
  diagnose->add_option("--profile", o.profile, "write a rank/length CSV profile");
  diagnose->add_option("--profile-statistic", o.profile_statistic)
      ->check(CLI::IsMember(statistics));
  diagnose->add_option("--output", o.output);

  auto* select = app.add_subcommand("select", "choose a top-k, bottom-k or random subset");
  select->add_option("--scores", o.scores)->required();
  select->add_option("--metric", o.select_metric)
      ->check(CLI::IsMember({"davir", "rho_lm", "random"}));
  select->add_option("--direction", o.direction)->check(CLI::IsMember({"highest", "lowest"}));
  select->add_option("--k", o.k)->required();
  select->add_option("--seed", o.seed);
  select->add_option("--corpus", o.corpus, "corpus to filter by the selection");
  select->add_option("--corpus-output", o.corpus_output);
  select->add_option("--output", o.output, "id list, one id per line")->required();

  auto* mix = app.add_subcommand("mix", "combine selected corpora");
  mix->add_option("--spec", o.spec)->required();
  mix->add_flag("--allow-collision", o.allow_collision, "rename colliding ids with a source prefix");
  mix->add_option("--output", o.output);

  auto* overlap = app.add_subcommand("overlap", "intersection of two id lists");
  overlap->add_option("--a", o.ids_a)->required();
  overlap->add_option("--b", o.ids_b)->required();
  overlap->add_option("--output", o.output);

  auto* dpo = app.add_subcommand("dpo", "preference objective report");
  dpo->add_option("--preferences", o.preferences)->required();
  dpo->add_option("--beta", o.beta)->check(positive);
  dpo->add_option("--variant", o.variant)->check(CLI::IsMember({"vanilla", "davir"}));
  dpo->add_option("--per-example", o.per_example, "per-example JSONL output");
  dpo->add_option("--report", o.report);

  auto* eval = app.add_subcommand("eval", "win score / win rate with bootstrap and t-test");
  eval->add_option("--outcomes", o.outcomes)->required();
  eval->add_option("--metric", o.eval_metric)->check(CLI::IsMember({"win-score", "win-rate"}));
  eval->add_option("--bootstrap", o.n_resamples, "resamples (0 disables the interval)");
  eval->add_option("--level", o.level);
  eval->add_option("--seed", o.seed);
  eval->add_option("--compare", o.compare, "second outcome file for a t-test");
  eval->add_option("--t-test-samples", o.t_samples)
      ->check(CLI::IsMember({"bootstrap", "per-question"}));
  eval->add_flag("--two-sided", o.two_sided);
  add_workers(eval);
  eval->add_option("--output", o.output);

  CLI::App* rerun = nullptr;
  if (allow_rerun) {
    rerun = app.add_subcommand("rerun", "replay a manifest and verify byte-identical outputs");
    rerun->add_option("--manifest", o.manifest)->required();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error({kUsage, "usage", e.what()});
    return kUsage;
  }

  try {
    if (rerun && rerun->parsed()) {
      cmd_rerun(o);
      return kOk;
    }
    check_outputs_distinct(o);
    CLI::App* sub = app.get_subcommands().front();
    RunManifest manifest(sub->get_name(), args);
    const std::string& name = sub->get_name();
    spdlog::debug("{}: starting", name);
    if (name == "synth") cmd_synth(o, manifest);
    else if (name == "toylm-fit") cmd_toylm_fit(o, manifest);
    else if (name == "toylm-finetune") cmd_toylm_finetune(o, manifest);
    else if (name == "toylm-score") cmd_toylm_score(o, manifest);
    else if (name == "score") cmd_score(o, manifest);
    else if (name == "diagnose") cmd_diagnose(o, manifest);
    else if (name == "select") cmd_select(o, manifest);
    else if (name == "mix") cmd_mix(o, manifest);
    else if (name == "overlap") cmd_overlap(o, manifest);
    else if (name == "dpo") cmd_dpo(o, manifest);
    else if (name == "eval") cmd_eval(o, manifest);
    if (!manifest.outputs().empty()) manifest.finish();
    for (const auto& out : manifest.outputs()) spdlog::info("wrote {}", out.string());
    return kOk;
  } catch (const CliError& e) {
    report_error(e);
    return e.exit_code;
  } catch (const IoFailure& e) {
    report_error({kIo, "io", e.what()});
    return kIo;
  } catch (const fs::filesystem_error& e) {
    report_error({kIo, "io", e.what()});
    return kIo;
  } catch (const std::exception& e) {
    report_error({kUnexpected, "internal", e.what()});
    return kUnexpected;
  }
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("davir");
  logger->set_pattern("[%Y-%m-%dT%H:%M:%S.%e] [%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("DAVIR_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace
}  // namespace davir::cli

int main(int argc, char** argv) {
  davir::cli::configure_logging();
  return davir::cli::run(std::vector<std::string>(argv + 1, argv + argc), true);
}
