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

#include "davir/toy_lm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "davir/error.hpp"
#include "davir/io.hpp"
#include "davir/parallel.hpp"
#include "davir/rng.hpp"
#include "json.hpp"

namespace davir::toylm {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "davir-ngram";

using CountTable = std::map<std::u32string, std::map<Symbol, double>>;

void check_params(int order, double lambda) {
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("smoothing lambda must be a positive finite number");
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  auto bad = [] { throw ValidationError("invalid UTF-8 sequence"); };
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len;
    char32_t cp;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      bad();
    }
    if (i + len > text.size()) bad();
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) bad();
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad();
    out.push_back(cp);
    i += len;
  }
  return out;
}

NGramModel::NGramModel(int order, double lambda, std::vector<Symbol> vocab)
    : order_(order), lambda_(lambda), vocab_(std::move(vocab)) {
  check_params(order, lambda);
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
}

bool NGramModel::contains(Symbol s) const {
  return std::binary_search(vocab_.begin(), vocab_.end(), s);
}

std::u32string NGramModel::sequence(const Document& doc, std::size_t* response_start) const {
  std::u32string seq(static_cast<std::size_t>(order_), kBos);
  seq += decode_utf8(doc.prompt);
  if (response_start) *response_start = seq.size();
  seq += decode_utf8(doc.response);
  seq.push_back(kEos);
  return seq;
}

namespace {

// Counts transitions of `docs` into `table`; returns the number counted.
double count_into(CountTable& table, std::set<Symbol>& symbols, std::span<const Document> docs,
                  int order) {
  double mass = 0.0;
  for (const auto& doc : docs) {
    std::u32string seq(static_cast<std::size_t>(order), kBos);
    seq += decode_utf8(doc.prompt);
    seq += decode_utf8(doc.response);
    seq.push_back(kEos);
    symbols.insert(seq.begin() + order, seq.end());
    for (std::size_t t = static_cast<std::size_t>(order); t < seq.size(); ++t) {
      table[seq.substr(t - order, order)][seq[t]] += 1.0;
      mass += 1.0;
    }
  }
  return mass;
}

}  // namespace

NGramModel NGramModel::fit(std::span<const Document> texts, const FitOptions& options) {
  check_params(options.order, options.smoothing_lambda);
  if (texts.empty()) throw DegenerateInputError("cannot fit an n-gram model on an empty corpus");
  CountTable table;
  std::set<Symbol> symbols{kBos, kEos};
  symbols.insert(options.extra_alphabet.begin(), options.extra_alphabet.end());
  const double mass = count_into(table, symbols, texts, options.order);

  NGramModel model(options.order, options.smoothing_lambda,
                   std::vector<Symbol>(symbols.begin(), symbols.end()));
  model.mass_ = mass;
  for (auto& [ctx, next] : table) {
    ContextCounts cc;
    for (auto& [s, c] : next) {
      cc.next.emplace_back(s, c);
      cc.total += c;
    }
    model.contexts_.emplace(ctx, std::move(cc));
  }
  return model;
}

NGramModel NGramModel::uniform(int order, double smoothing_lambda, std::u32string alphabet) {
  std::vector<Symbol> vocab(alphabet.begin(), alphabet.end());
  vocab.push_back(kBos);
  vocab.push_back(kEos);
  return NGramModel(order, smoothing_lambda, std::move(vocab));
}

NGramModel NGramModel::finetune(std::span<const Document> d_full, double mix_weight) const {
  if (!(mix_weight > 0.0 && mix_weight <= 1.0))
    throw std::invalid_argument("mix_weight must lie in (0, 1]");
  if (d_full.empty()) throw DegenerateInputError("cannot fine-tune on an empty corpus");

  CountTable fresh;
  std::set<Symbol> symbols(vocab_.begin(), vocab_.end());
  const double fresh_mass = count_into(fresh, symbols, d_full, order_);
  const double base_scale = mass_ > 0.0 ? (1.0 - mix_weight) * (fresh_mass / mass_) : 0.0;

  CountTable mixed;
  for (const auto& [ctx, cc] : contexts_) {
    auto& row = mixed[ctx];
    for (const auto& [s, c] : cc.next) row[s] = base_scale * c;
  }
  for (const auto& [ctx, next] : fresh) {
    auto& row = mixed[ctx];
    for (const auto& [s, c] : next) row[s] += mix_weight * c;
  }

  NGramModel out(order_, lambda_, std::vector<Symbol>(symbols.begin(), symbols.end()));
  out.mass_ = base_scale * mass_ + mix_weight * fresh_mass;
  for (auto& [ctx, next] : mixed) {
    ContextCounts cc;
    for (auto& [s, c] : next) {
      if (c == 0.0) continue;
      cc.next.emplace_back(s, c);
      cc.total += c;
    }
    if (!cc.next.empty()) out.contexts_.emplace(ctx, std::move(cc));
  }
  return out;
}

const NGramModel::ContextCounts* NGramModel::find(std::u32string_view context) const {
  auto it = contexts_.find(std::u32string(context));
  return it == contexts_.end() ? nullptr : &it->second;
}

double NGramModel::probability(std::u32string_view context, Symbol next) const {
  if (context.size() != static_cast<std::size_t>(order_))
    throw std::invalid_argument("context length must equal the model order");
  const double v = static_cast<double>(vocab_.size());
  const ContextCounts* cc = find(context);
  if (!cc) return 1.0 / v;
  double count = 0.0;
  auto it = std::lower_bound(cc->next.begin(), cc->next.end(), next,
                             [](const auto& e, Symbol s) { return e.first < s; });
  if (it != cc->next.end() && it->first == next) count = it->second;
  return (count + lambda_) / (cc->total + lambda_ * v);
}

double NGramModel::entropy(std::u32string_view context) const {
  const double v = static_cast<double>(vocab_.size());
  const ContextCounts* cc = find(context);
  if (!cc) return std::log(v);
  const double denom = cc->total + lambda_ * v;
  double h = 0.0;
  for (const auto& [s, c] : cc->next) {
    const double p = (c + lambda_) / denom;
    h -= p * std::log(p);
  }
  // Every unobserved symbol shares the smoothing floor.
  const double unseen = v - static_cast<double>(cc->next.size());
  if (unseen > 0.0) {
    const double p0 = lambda_ / denom;
    h -= unseen * p0 * std::log(p0);
  }
  return std::max(h, 0.0);
}

void NGramModel::check_vocab(const std::u32string& seq, const std::string& id) const {
  for (std::size_t t = static_cast<std::size_t>(order_); t < seq.size(); ++t) {
    if (!contains(seq[t]))
      throw ValidationError("document \"" + id + "\" contains symbol U+" +
                            std::to_string(static_cast<unsigned long>(seq[t])) +
                            " outside the model vocabulary");
  }
}

std::vector<double> NGramModel::score_nll(const Document& doc) const {
  if (doc.response.empty())
    throw ValidationError("document \"" + doc.id + "\" has an empty response");
  std::size_t start = 0;
  const std::u32string seq = sequence(doc, &start);
  check_vocab(seq, doc.id);
  std::vector<double> nll;
  nll.reserve(seq.size() - start);
  const std::u32string_view view(seq);
  for (std::size_t t = start; t < seq.size(); ++t)
    nll.push_back(-std::log(probability(view.substr(t - order_, order_), seq[t])));
  return nll;
}

std::vector<double> NGramModel::per_position_entropy(const Document& doc) const {
  if (doc.response.empty())
    throw ValidationError("document \"" + doc.id + "\" has an empty response");
  std::size_t start = 0;
  const std::u32string seq = sequence(doc, &start);
  std::vector<double> h;
  h.reserve(seq.size() - start);
  const std::u32string_view view(seq);
  for (std::size_t t = start; t < seq.size(); ++t) h.push_back(entropy(view.substr(t - order_, order_)));
  return h;
}

ModelNllRecord NGramModel::score(const Document& doc, bool with_entropy) const {
  ModelNllRecord rec{doc.id, score_nll(doc), std::nullopt};
  if (with_entropy) rec.entropy = per_position_entropy(doc);
  return rec;
}

std::vector<ModelNllRecord> NGramModel::score_corpus(std::span<const Document> docs,
                                                     bool with_entropy,
                                                     std::size_t workers) const {
  std::vector<ModelNllRecord> out(docs.size());
  parallel_for(docs.size(), workers, [&](std::size_t i) { out[i] = score(docs[i], with_entropy); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

void NGramModel::save(const std::filesystem::path& path) const {
  using nlohmann::json;
  json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  doc["order"] = order_;
  doc["smoothing_lambda"] = lambda_;
  doc["mass"] = mass_;
  doc["vocab"] = json::array();
  for (Symbol s : vocab_) doc["vocab"].push_back(static_cast<std::uint32_t>(s));

  std::vector<const std::pair<const std::u32string, ContextCounts>*> sorted;
  sorted.reserve(contexts_.size());
  for (const auto& entry : contexts_) sorted.push_back(&entry);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });
  json contexts = json::array();
  for (const auto* entry : sorted) {
    json ctx = json::array();
    for (Symbol s : entry->first) ctx.push_back(static_cast<std::uint32_t>(s));
    json next = json::array();
    for (const auto& [s, c] : entry->second.next)
      next.push_back(json::array({static_cast<std::uint32_t>(s), c}));
    contexts.push_back({{"context", std::move(ctx)}, {"total", entry->second.total},
                        {"next", std::move(next)}});
  }
  doc["contexts"] = std::move(contexts);

  io::AtomicFileWriter writer(path);
  writer.stream() << doc.dump() << '\n';
  writer.commit();
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("format") != kFormatName) throw ValidationError("not an n-gram model file");
    if (doc.at("version") != kFormatVersion)
      throw ValidationError("unsupported model format version " + doc.at("version").dump());
    std::vector<Symbol> vocab;
    for (const auto& s : doc.at("vocab")) vocab.push_back(s.get<std::uint32_t>());
    NGramModel model(doc.at("order").get<int>(), doc.at("smoothing_lambda").get<double>(),
                     std::move(vocab));
    model.mass_ = doc.at("mass").get<double>();
    for (const auto& entry : doc.at("contexts")) {
      std::u32string ctx;
      for (const auto& s : entry.at("context")) ctx.push_back(s.get<std::uint32_t>());
      if (ctx.size() != static_cast<std::size_t>(model.order_))
        throw ValidationError("context length does not match model order");
      ContextCounts cc;
      cc.total = entry.at("total").get<double>();
      for (const auto& pair : entry.at("next"))
        cc.next.emplace_back(pair.at(0).get<std::uint32_t>(), pair.at(1).get<double>());
      if (!std::is_sorted(cc.next.begin(), cc.next.end()))
        throw ValidationError("context successors must be sorted by symbol");
      model.contexts_.emplace(std::move(ctx), std::move(cc));
    }
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed model file: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<Document> synthesize_corpus(const SynthOptions& options) {
  if (options.n_styles == 0) throw std::invalid_argument("n_styles must be >= 1");
  if (options.min_prompt > options.max_prompt || options.min_response > options.max_response ||
      options.min_response == 0)
    throw std::invalid_argument("invalid synthetic length range");
  static const std::string kAlphabet = "abcdefghijklmnopqrstuvwxyz ";
  const std::size_t a = kAlphabet.size();

  // Each style: a sparse transition table with a few favoured successors.
  Rng style_rng(options.seed, /*stream=*/1);
  std::vector<std::vector<std::vector<double>>> styles(options.n_styles);
  for (auto& style : styles) {
    style.assign(a, std::vector<double>(a, 0.02));
    for (std::size_t from = 0; from < a; ++from) {
      for (int k = 0; k < 3; ++k) style[from][style_rng.uniform_index(a)] += 1.0 + 3.0 * style_rng.uniform01();
      double total = 0.0;
      for (double w : style[from]) total += w;
      for (double& w : style[from]) w /= total;
    }
  }

  Rng rng(options.seed, /*stream=*/2);
  auto emit = [&](const std::vector<std::vector<double>>& style, std::size_t len) {
    std::string text;
    std::size_t state = rng.uniform_index(a - 1);
    for (std::size_t i = 0; i < len; ++i) {
      text.push_back(kAlphabet[state]);
      double u = rng.uniform01();
      std::size_t next = 0;
      for (; next + 1 < a; ++next) {
        u -= style[state][next];
        if (u < 0.0) break;
      }
      state = next;
    }
    return text;
  };

  const int width = static_cast<int>(std::to_string(options.n_docs).size());
  std::vector<Document> docs;
  docs.reserve(options.n_docs);
  for (std::size_t i = 0; i < options.n_docs; ++i) {
    const std::size_t s = rng.uniform_index(options.n_styles);
    const std::size_t plen =
        options.min_prompt + rng.uniform_index(options.max_prompt - options.min_prompt + 1);
    const std::size_t rlen =
        options.min_response + rng.uniform_index(options.max_response - options.min_response + 1);
    std::string num = std::to_string(i);
    num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
    Document doc;
    doc.id = options.id_prefix + "-" + num;
    doc.prompt = emit(styles[s], plen);
    doc.response = emit(styles[s], rlen);
    doc.tags = {"style-" + std::to_string(s)};
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace davir::toylm
