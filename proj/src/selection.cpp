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

#include "davir/selection.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "davir/error.hpp"
#include "davir/io.hpp"
#include "davir/rng.hpp"
#include "json.hpp"

namespace davir {

namespace fs = std::filesystem;

SelectionMetric parse_selection_metric(std::string_view name) {
  if (name == "davir") return SelectionMetric::kDavir;
  if (name == "rho_lm" || name == "rho-lm") return SelectionMetric::kRhoLm;
  if (name == "random") return SelectionMetric::kRandom;
  throw std::invalid_argument("unknown selection metric '" + std::string(name) + "'");
}

SelectionDirection parse_selection_direction(std::string_view name) {
  if (name == "highest") return SelectionDirection::kHighest;
  if (name == "lowest") return SelectionDirection::kLowest;
  throw std::invalid_argument("unknown selection direction '" + std::string(name) + "'");
}

std::string_view to_string(SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::kDavir: return "davir";
    case SelectionMetric::kRhoLm: return "rho_lm";
    case SelectionMetric::kRandom: return "random";
  }
  return "unknown";
}

std::string_view to_string(SelectionDirection direction) {
  return direction == SelectionDirection::kHighest ? "highest" : "lowest";
}

std::vector<std::string> select(std::span<const ScoredDocument> scored,
                                const SelectionSpec& spec) {
  if (spec.k < 1) throw std::invalid_argument("k must be >= 1");

  struct Candidate {
    const std::string* id;
    double value;
  };
  std::vector<Candidate> usable;
  usable.reserve(scored.size());
  for (const auto& doc : scored) {
    switch (spec.metric) {
      case SelectionMetric::kDavir:
        if (doc.davir) usable.push_back({&doc.id, *doc.davir});
        break;
      case SelectionMetric::kRhoLm:
        usable.push_back({&doc.id, doc.rho_lm});
        break;
      case SelectionMetric::kRandom:
        // No metric involved, so every scored document is eligible.
        usable.push_back({&doc.id, 0.0});
        break;
    }
  }
  if (usable.empty()) throw DegenerateInputError("no document has a usable score");
  const std::size_t k = std::min(usable.size(), static_cast<std::size_t>(spec.k));

  std::vector<std::string> out;
  out.reserve(k);
  if (spec.metric == SelectionMetric::kRandom) {
    std::sort(usable.begin(), usable.end(),
              [](const Candidate& a, const Candidate& b) { return *a.id < *b.id; });
    // Partial Fisher-Yates over the id-sorted pool.
    Rng rng(spec.seed, /*stream=*/0x5E1EC7);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.uniform_index(usable.size() - i);
      std::swap(usable[i], usable[j]);
    }
    std::sort(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(k),
              [](const Candidate& a, const Candidate& b) { return *a.id < *b.id; });
  } else {
    const bool highest = spec.direction == SelectionDirection::kHighest;
    auto better = [highest](const Candidate& a, const Candidate& b) {
      if (a.value != b.value) return highest ? a.value > b.value : a.value < b.value;
      return *a.id < *b.id;
    };
    std::partial_sort(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(k),
                      usable.end(), better);
  }
  for (std::size_t i = 0; i < k; ++i) out.push_back(*usable[i].id);
  return out;
}

Overlap selection_overlap(std::span<const std::string> a, std::span<const std::string> b) {
  std::unordered_set<std::string_view> in_b(b.begin(), b.end());
  Overlap o;
  for (const auto& id : a) o.count += in_b.count(id);
  o.fraction = a.empty() ? 0.0 : static_cast<double>(o.count) / static_cast<double>(a.size());
  return o;
}

std::vector<Document> filter_corpus(std::span<const Document> corpus,
                                    std::span<const std::string> ids) {
  std::unordered_map<std::string_view, const Document*> by_id;
  for (const auto& d : corpus) by_id.emplace(d.id, &d);
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("id \"" + id + "\" not found in corpus");
    out.push_back(*it->second);
  }
  return out;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  io::LineReader lines(path);
  std::vector<std::string> ids;
  while (auto line = lines.next()) ids.emplace_back(*line);
  return ids;
}

void write_id_list(const fs::path& path, std::span<const std::string> ids) {
  io::AtomicFileWriter writer(path);
  for (const auto& id : ids) {
    if (id.find('\n') != std::string::npos)
      throw ValidationError("id \"" + id + "\" contains a newline");
    writer.stream() << id << '\n';
  }
  writer.commit();
}

std::size_t MixStats::total() const {
  return std::accumulate(per_component.begin(), per_component.end(), std::size_t{0});
}

MixSpec read_mix_spec(const fs::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_relative() ? base / q : q;
  };
  MixSpec spec;
  try {
    json doc = json::parse(in);
    for (const auto& c : doc.at("components")) {
      MixComponent comp;
      comp.corpus = resolve(c.at("corpus").get<std::string>());
      comp.name = c.value("name", comp.corpus.stem().string());
      const json& sel = c.contains("select") ? c.at("select") : json("all");
      if (!(sel.is_string() && sel.get<std::string>() == "all")) {
        SelectionSpec s;
        s.metric = parse_selection_metric(sel.value("metric", "davir"));
        s.direction = parse_selection_direction(sel.value("direction", "highest"));
        s.k = sel.at("k").get<std::int64_t>();
        s.seed = sel.value("seed", std::uint64_t{0});
        comp.selection = s;
        comp.scores = resolve(c.at("scores").get<std::string>());
      }
      spec.components.push_back(std::move(comp));
    }
    if (doc.contains("output")) spec.output = resolve(doc.at("output").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed mix spec: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (spec.components.empty())
    throw ValidationError(path.string() + ": mix spec needs at least one component");
  return spec;
}

std::vector<Document> mix(const MixSpec& spec, bool allow_collision, MixStats* stats) {
  if (spec.components.empty())
    throw ValidationError("mix spec needs at least one component");
  MixStats local;
  std::vector<Document> out;
  std::unordered_map<std::string, std::string> owner;  // id -> source name

  for (const auto& comp : spec.components) {
    const std::string name = comp.name.empty() ? comp.corpus.stem().string() : comp.name;
    std::vector<Document> docs = read_corpus(comp.corpus);
    if (comp.selection) {
      const auto scores = read_scores(comp.scores);
      const auto ids = select(scores, *comp.selection);
      docs = filter_corpus(docs, ids);
    }
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.id < b.id; });
    std::size_t taken = 0;
    for (auto& doc : docs) {
      auto it = owner.find(doc.id);
      if (it != owner.end()) {
        if (!allow_collision)
          throw ValidationError("id \"" + doc.id + "\" appears in both " + it->second + " and " +
                                name);
        doc.id = name + "/" + doc.id;
        ++local.renamed;
        if (owner.count(doc.id)) {
          ++local.dropped_duplicates;
          continue;
        }
      }
      owner.emplace(doc.id, name);
      doc.tags.push_back("source:" + name);
      out.push_back(std::move(doc));
      ++taken;
    }
    local.per_component.push_back(taken);
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace davir
