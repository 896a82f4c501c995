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

// Character-level add-lambda n-gram language model. It plays the part of
// the base and fine-tuned reference models so the whole selection pipeline
// can run without an external trainer.
//
// A document is modelled as the symbol sequence
//
//   BOS^order  prompt  response  EOS
//
// and every symbol after the BOS padding is predicted from the `order`
// symbols before it:
//
//   P(s | c) = (count(c, s) + lambda) / (total(c) + lambda * |V|)
//
// V contains every symbol seen in training (plus any extra alphabet), BOS
// and EOS. Scoring reports NLLs for the response symbols and the final EOS
// only; prompt symbols are context.

#ifndef DAVIR_TOY_LM_HPP
#define DAVIR_TOY_LM_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "davir/corpus_io.hpp"

namespace davir::toylm {

using Symbol = char32_t;

/// Sentinels live just past the Unicode range so they never collide with
/// text.
inline constexpr Symbol kBos = 0x110000;
inline constexpr Symbol kEos = 0x110001;

/// Decodes UTF-8 into code points. Throws ValidationError on malformed input.
std::u32string decode_utf8(std::string_view text);

struct FitOptions {
  int order = 3;
  double smoothing_lambda = 0.1;
  /// Symbols added to the vocabulary even if the training text lacks them,
  /// so that text outside the training set can still be scored.
  std::u32string extra_alphabet;
};

class NGramModel {
 public:
  /// Counts every (context, next) pair of the given documents.
  static NGramModel fit(std::span<const Document> texts, const FitOptions& options);

  /// A model with no observations: every prediction is uniform over vocab.
  static NGramModel uniform(int order, double smoothing_lambda, std::u32string alphabet);

  /// Simulated fine-tuning on d_full. The result's counts are
  ///
  ///   (1 - w) * (N_d / N_base) * base.counts + w * counts(d_full)
  ///
  /// where N is the total number of observed transitions. Base counts are
  /// rescaled to the mass of d_full so that w is a genuine mixing weight.
  /// The vocabulary is the union of both.
  NGramModel finetune(std::span<const Document> d_full, double mix_weight) const;

  int order() const { return order_; }
  double smoothing_lambda() const { return lambda_; }
  const std::vector<Symbol>& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  bool contains(Symbol s) const;
  /// Total observed transition mass.
  double mass() const { return mass_; }
  std::size_t context_count() const { return contexts_.size(); }

  /// P(next | context); `context` holds exactly order() symbols.
  double probability(std::u32string_view context, Symbol next) const;
  /// Shannon entropy (nats) of the predictive distribution after `context`.
  double entropy(std::u32string_view context) const;

  /// -ln P per response symbol, then EOS. Length = response symbols + 1.
  /// Throws ValidationError if the document has an empty response or uses a
  /// symbol outside the vocabulary.
  std::vector<double> score_nll(const Document& doc) const;
  std::vector<double> per_position_entropy(const Document& doc) const;
  ModelNllRecord score(const Document& doc, bool with_entropy = true) const;
  std::vector<ModelNllRecord> score_corpus(std::span<const Document> docs, bool with_entropy,
                                           std::size_t workers = 1) const;

  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);

  bool operator==(const NGramModel&) const = default;

 private:
  struct ContextCounts {
    double total = 0.0;
    /// Sorted by symbol.
    std::vector<std::pair<Symbol, double>> next;
    bool operator==(const ContextCounts&) const = default;
  };

  NGramModel(int order, double lambda, std::vector<Symbol> vocab);

  /// Symbol sequence BOS^order + prompt + response + EOS; also reports where
  /// the response starts.
  std::u32string sequence(const Document& doc, std::size_t* response_start) const;
  const ContextCounts* find(std::u32string_view context) const;
  void check_vocab(const std::u32string& seq, const std::string& id) const;

  int order_;
  double lambda_;
  std::vector<Symbol> vocab_;
  double mass_ = 0.0;
  std::unordered_map<std::u32string, ContextCounts> contexts_;
};

struct SynthOptions {
  std::size_t n_docs = 1000;
  std::size_t n_styles = 4;
  std::size_t min_prompt = 10;
  std::size_t max_prompt = 40;
  std::size_t min_response = 5;
  std::size_t max_response = 500;
  std::uint64_t seed = 0;
  std::string id_prefix = "doc";
};

/// Seeded synthetic corpus: each document is emitted by one of several
/// random first-order Markov "styles" over lowercase letters and space, and
/// tagged with the style name.
std::vector<Document> synthesize_corpus(const SynthOptions& options);

}  // namespace davir::toylm

#endif  // DAVIR_TOY_LM_HPP
