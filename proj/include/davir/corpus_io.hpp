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

// Record types and JSONL readers/writers for corpora, loss dumps and score
// files. All NLL values are in nats and cover response tokens only.

#ifndef DAVIR_CORPUS_IO_HPP
#define DAVIR_CORPUS_IO_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "davir/io.hpp"

namespace davir {

/// One training datum: prompt x and response y.
struct Document {
  std::string id;
  std::string prompt;
  std::string response;
  std::vector<std::string> tags;

  bool operator==(const Document&) const = default;
};

/// Per-response-token NLL under the base and reference models.
struct TokenLossRecord {
  std::string id;
  std::vector<double> nll_base;
  std::vector<double> nll_ref;
  std::optional<std::vector<double>> entropy_base;

  bool operator==(const TokenLossRecord&) const = default;

  /// Throws ValidationError unless the arrays are non-empty, equally long,
  /// finite and non-negative.
  void validate() const;
};

/// NLL dump of a single model (what `toylm-score` emits). Two of these, one
/// per model, combine into TokenLossRecords.
struct ModelNllRecord {
  std::string id;
  std::vector<double> nll;
  std::optional<std::vector<double>> entropy;

  bool operator==(const ModelNllRecord&) const = default;
  void validate() const;
};

struct ScoredDocument {
  std::string id;
  std::size_t n_tokens = 0;
  double loss_base = 0.0;
  double loss_ref = 0.0;
  double rho_lm = 0.0;
  /// Empty when loss_base == 0 (already memorized; no relative reduction).
  std::optional<double> davir;
  /// Per-token mean of the base NLL, independent of the aggregation mode.
  /// Optional in score files written by other tools.
  std::optional<double> mean_loss_base;
  std::optional<double> mean_entropy_base;

  bool operator==(const ScoredDocument&) const = default;
};

/// Policy for ids present on only one side of a join.
enum class JoinPolicy { kWarnAndSkip, kStrict };

struct JoinStats {
  std::size_t matched = 0;
  std::size_t missing_losses = 0;    // documents without a loss record
  std::size_t orphan_losses = 0;     // loss records without a document
  std::size_t warnings() const { return missing_losses + orphan_losses; }
};

struct JoinedRecord {
  Document document;
  TokenLossRecord losses;
};

/// Streams validated Documents from a corpus JSONL file in file order.
/// Duplicate ids are detected across the whole stream.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path);
  std::optional<Document> next();

 private:
  io::LineReader lines_;
  std::unordered_set<std::string> seen_;
};

std::vector<Document> read_corpus(const std::filesystem::path& path);
std::vector<TokenLossRecord> read_losses(const std::filesystem::path& path);
std::vector<ModelNllRecord> read_model_nll(const std::filesystem::path& path);
std::vector<ScoredDocument> read_scores(const std::filesystem::path& path);

void write_corpus(const std::filesystem::path& path, std::span<const Document> docs);
void write_losses(const std::filesystem::path& path,
                  std::span<const TokenLossRecord> records);
void write_model_nll(const std::filesystem::path& path,
                     std::span<const ModelNllRecord> records);
void write_scores(const std::filesystem::path& path,
                  std::span<const ScoredDocument> scores);

/// Single JSONL lines, without the trailing newline.
std::string to_jsonl(const Document& doc);
std::string to_jsonl(const TokenLossRecord& record);
std::string to_jsonl(const ModelNllRecord& record);
std::string to_jsonl(const ScoredDocument& scored);

/// Inner join by id, ordered by id ascending regardless of input order.
/// Every matched loss record is validated; a mismatch throws even in
/// warn-and-skip mode.
std::vector<JoinedRecord> join_losses(std::span<const Document> corpus,
                                      std::span<const TokenLossRecord> losses,
                                      JoinPolicy policy, JoinStats* stats = nullptr);

/// Pairs a base-model dump with a reference-model dump by id. Entropies are
/// taken from the base dump. Output is id-sorted.
std::vector<TokenLossRecord> combine_model_nll(std::span<const ModelNllRecord> base,
                                               std::span<const ModelNllRecord> ref,
                                               JoinPolicy policy,
                                               JoinStats* stats = nullptr);

}  // namespace davir

#endif  // DAVIR_CORPUS_IO_HPP
