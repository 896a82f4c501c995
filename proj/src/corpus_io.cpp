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

#include "davir/corpus_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string_view>

#include "davir/error.hpp"
#include "json.hpp"

namespace davir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail_at(const io::LineReader& lines, const std::string& what) {
  throw ValidationError(lines.path().string() + ":" + std::to_string(lines.line_number()) +
                        ": " + what);
}

json parse_object(io::LineReader& lines, std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail_at(lines, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail_at(lines, "expected a JSON object");
  return obj;
}

std::string required_string(io::LineReader& lines, const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_at(lines, std::string("missing field '") + key + "'");
  if (!it->is_string()) fail_at(lines, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<double> number_array(io::LineReader& lines, const json& value, const char* key) {
  if (!value.is_array()) fail_at(lines, std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (const auto& v : value) {
    if (!v.is_number()) fail_at(lines, std::string("field '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> required_array(io::LineReader& lines, const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_at(lines, std::string("missing field '") + key + "'");
  return number_array(lines, *it, key);
}

std::optional<std::vector<double>> optional_array(io::LineReader& lines, const json& obj,
                                                  const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return number_array(lines, *it, key);
}

double required_number(io::LineReader& lines, const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number())
    fail_at(lines, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

std::optional<double> optional_number(io::LineReader& lines, const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail_at(lines, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

void check_losses(const std::string& id, std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("id \"" + id + "\": " + what +
                            " entries must be finite and non-negative");
  }
}

// Reads records of one kind, rejecting duplicate ids.
template <typename Record, typename Parse>
std::vector<Record> read_records(const fs::path& path, Parse parse) {
  io::LineReader lines(path);
  std::unordered_set<std::string> seen;
  std::vector<Record> out;
  while (auto line = lines.next()) {
    json obj = parse_object(lines, *line);
    Record rec = parse(lines, obj);
    if (!seen.insert(rec.id).second) fail_at(lines, "duplicate id \"" + rec.id + "\"");
    out.push_back(std::move(rec));
  }
  return out;
}

template <typename Record>
void write_records(const fs::path& path, std::span<const Record> records) {
  io::AtomicFileWriter writer(path);
  for (const auto& r : records) writer.stream() << to_jsonl(r) << '\n';
  writer.commit();
}

void append_optional_number(std::string& out, const std::optional<double>& v) {
  out += v ? io::format_double(*v) : "null";
}

}  // namespace

void TokenLossRecord::validate() const {
  if (nll_base.empty())
    throw ValidationError("id \"" + id + "\": loss arrays must be non-empty");
  if (nll_base.size() != nll_ref.size())
    throw ValidationError("id \"" + id + "\": nll_base has " + std::to_string(nll_base.size()) +
                          " entries but nll_ref has " + std::to_string(nll_ref.size()));
  check_losses(id, nll_base, "nll_base");
  check_losses(id, nll_ref, "nll_ref");
  if (entropy_base) {
    if (entropy_base->size() != nll_base.size())
      throw ValidationError("id \"" + id + "\": entropy_base length differs from nll_base");
    check_losses(id, *entropy_base, "entropy_base");
  }
}

void ModelNllRecord::validate() const {
  if (nll.empty()) throw ValidationError("id \"" + id + "\": nll must be non-empty");
  check_losses(id, nll, "nll");
  if (entropy) {
    if (entropy->size() != nll.size())
      throw ValidationError("id \"" + id + "\": entropy length differs from nll");
    check_losses(id, *entropy, "entropy");
  }
}

CorpusReader::CorpusReader(const fs::path& path) : lines_(path) {}

std::optional<Document> CorpusReader::next() {
  auto line = lines_.next();
  if (!line) return std::nullopt;
  json obj = parse_object(lines_, *line);
  Document doc;
  doc.id = required_string(lines_, obj, "id");
  doc.prompt = required_string(lines_, obj, "prompt");
  doc.response = required_string(lines_, obj, "response");
  if (auto it = obj.find("tags"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) fail_at(lines_, "field 'tags' must be an array of strings");
    for (const auto& t : *it) {
      if (!t.is_string()) fail_at(lines_, "field 'tags' must be an array of strings");
      doc.tags.push_back(t.get<std::string>());
    }
  }
  if (doc.id.empty()) fail_at(lines_, "empty id");
  if (doc.response.empty()) fail_at(lines_, "empty response for id \"" + doc.id + "\"");
  if (!seen_.insert(doc.id).second) fail_at(lines_, "duplicate id \"" + doc.id + "\"");
  return doc;
}

std::vector<Document> read_corpus(const fs::path& path) {
  CorpusReader reader(path);
  std::vector<Document> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

std::vector<TokenLossRecord> read_losses(const fs::path& path) {
  return read_records<TokenLossRecord>(path, [](io::LineReader& lines, const json& obj) {
    TokenLossRecord rec;
    rec.id = required_string(lines, obj, "id");
    rec.nll_base = required_array(lines, obj, "nll_base");
    rec.nll_ref = required_array(lines, obj, "nll_ref");
    rec.entropy_base = optional_array(lines, obj, "entropy_base");
    try {
      rec.validate();
    } catch (const ValidationError& e) {
      fail_at(lines, e.what());
    }
    return rec;
  });
}

std::vector<ModelNllRecord> read_model_nll(const fs::path& path) {
  return read_records<ModelNllRecord>(path, [](io::LineReader& lines, const json& obj) {
    ModelNllRecord rec;
    rec.id = required_string(lines, obj, "id");
    rec.nll = required_array(lines, obj, "nll");
    rec.entropy = optional_array(lines, obj, "entropy");
    try {
      rec.validate();
    } catch (const ValidationError& e) {
      fail_at(lines, e.what());
    }
    return rec;
  });
}

std::vector<ScoredDocument> read_scores(const fs::path& path) {
  return read_records<ScoredDocument>(path, [](io::LineReader& lines, const json& obj) {
    ScoredDocument s;
    s.id = required_string(lines, obj, "id");
    auto n = obj.find("n_tokens");
    if (n == obj.end() || !n->is_number_unsigned() || n->get<std::size_t>() == 0)
      fail_at(lines, "field 'n_tokens' must be a positive integer");
    s.n_tokens = n->get<std::size_t>();
    s.loss_base = required_number(lines, obj, "loss_base");
    s.loss_ref = required_number(lines, obj, "loss_ref");
    s.rho_lm = required_number(lines, obj, "rho_lm");
    s.davir = optional_number(lines, obj, "davir");
    s.mean_loss_base = optional_number(lines, obj, "mean_loss_base");
    s.mean_entropy_base = optional_number(lines, obj, "mean_entropy_base");
    return s;
  });
}

std::string to_jsonl(const Document& doc) {
  json obj = {{"id", doc.id}, {"prompt", doc.prompt}, {"response", doc.response}};
  if (!doc.tags.empty()) obj["tags"] = doc.tags;
  return obj.dump();
}

std::string to_jsonl(const TokenLossRecord& record) {
  std::string out = "{\"id\":" + io::quote_json(record.id) + ",\"nll_base\":";
  io::append_number_array(out, record.nll_base);
  out += ",\"nll_ref\":";
  io::append_number_array(out, record.nll_ref);
  if (record.entropy_base) {
    out += ",\"entropy_base\":";
    io::append_number_array(out, *record.entropy_base);
  }
  out += '}';
  return out;
}

std::string to_jsonl(const ModelNllRecord& record) {
  std::string out = "{\"id\":" + io::quote_json(record.id) + ",\"nll\":";
  io::append_number_array(out, record.nll);
  if (record.entropy) {
    out += ",\"entropy\":";
    io::append_number_array(out, *record.entropy);
  }
  out += '}';
  return out;
}

std::string to_jsonl(const ScoredDocument& s) {
  std::string out = "{\"id\":" + io::quote_json(s.id);
  out += ",\"n_tokens\":" + std::to_string(s.n_tokens);
  out += ",\"loss_base\":" + io::format_double(s.loss_base);
  out += ",\"loss_ref\":" + io::format_double(s.loss_ref);
  out += ",\"rho_lm\":" + io::format_double(s.rho_lm);
  out += ",\"davir\":";
  append_optional_number(out, s.davir);
  if (s.mean_loss_base) out += ",\"mean_loss_base\":" + io::format_double(*s.mean_loss_base);
  if (s.mean_entropy_base)
    out += ",\"mean_entropy_base\":" + io::format_double(*s.mean_entropy_base);
  out += '}';
  return out;
}

void write_corpus(const fs::path& path, std::span<const Document> docs) {
  write_records(path, docs);
}
void write_losses(const fs::path& path, std::span<const TokenLossRecord> records) {
  write_records(path, records);
}
void write_model_nll(const fs::path& path, std::span<const ModelNllRecord> records) {
  write_records(path, records);
}
void write_scores(const fs::path& path, std::span<const ScoredDocument> scores) {
  write_records(path, scores);
}

namespace {

// Shared id-keyed inner join. `left` and `right` are indexed by id; ids on
// only one side are counted (or rejected under kStrict).
template <typename L, typename R, typename Emit>
void inner_join(std::span<const L> left, std::span<const R> right, JoinPolicy policy,
                JoinStats* stats, const char* left_name, const char* right_name, Emit emit) {
  std::map<std::string_view, const L*> lhs;
  std::map<std::string_view, const R*> rhs;
  for (const auto& l : left) {
    if (!lhs.emplace(l.id, &l).second)
      throw ValidationError("duplicate id \"" + l.id + "\" in " + left_name);
  }
  for (const auto& r : right) {
    if (!rhs.emplace(r.id, &r).second)
      throw ValidationError("duplicate id \"" + r.id + "\" in " + right_name);
  }
  JoinStats local;
  auto li = lhs.begin();
  auto ri = rhs.begin();
  auto unmatched = [&](std::string_view id, const char* have, const char* lack) {
    if (policy == JoinPolicy::kStrict)
      throw ValidationError("id \"" + std::string(id) + "\" present in " + have +
                            " but missing from " + lack);
  };
  while (li != lhs.end() || ri != rhs.end()) {
    if (ri == rhs.end() || (li != lhs.end() && li->first < ri->first)) {
      unmatched(li->first, left_name, right_name);
      ++local.missing_losses;
      ++li;
    } else if (li == lhs.end() || ri->first < li->first) {
      unmatched(ri->first, right_name, left_name);
      ++local.orphan_losses;
      ++ri;
    } else {
      emit(*li->second, *ri->second);
      ++local.matched;
      ++li;
      ++ri;
    }
  }
  if (stats) *stats = local;
}

}  // namespace

std::vector<JoinedRecord> join_losses(std::span<const Document> corpus,
                                      std::span<const TokenLossRecord> losses,
                                      JoinPolicy policy, JoinStats* stats) {
  std::vector<JoinedRecord> out;
  inner_join(corpus, losses, policy, stats, "corpus", "loss file",
             [&](const Document& d, const TokenLossRecord& l) {
               l.validate();
               out.push_back({d, l});
             });
  return out;
}

std::vector<TokenLossRecord> combine_model_nll(std::span<const ModelNllRecord> base,
                                               std::span<const ModelNllRecord> ref,
                                               JoinPolicy policy, JoinStats* stats) {
  std::vector<TokenLossRecord> out;
  inner_join(base, ref, policy, stats, "base loss file", "reference loss file",
             [&](const ModelNllRecord& b, const ModelNllRecord& r) {
               TokenLossRecord rec{b.id, b.nll, r.nll, b.entropy};
               rec.validate();
               out.push_back(std::move(rec));
             });
  return out;
}

}  // namespace davir
