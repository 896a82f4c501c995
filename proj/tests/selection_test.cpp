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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "davir/corpus_io.hpp"
#include "davir/error.hpp"
#include "davir/rng.hpp"
#include "davir/selection.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using davir::Document;
using davir::ScoredDocument;
using davir::SelectionDirection;
using davir::SelectionMetric;
using davir::SelectionSpec;
using davir::testing::TempDir;

namespace {

ScoredDocument scored(std::string id, std::optional<double> davir, double rho = 0.0) {
  ScoredDocument s;
  s.id = std::move(id);
  s.n_tokens = 10;
  s.loss_base = 1.0;
  s.loss_ref = 1.0;
  s.rho_lm = rho;
  s.davir = davir;
  return s;
}

SelectionSpec spec(SelectionMetric m, SelectionDirection d, std::int64_t k, std::uint64_t seed = 0) {
  return {m, d, k, seed};
}

std::vector<std::string> ids(std::initializer_list<const char*> list) { return {list.begin(), list.end()}; }

std::vector<std::string> numbered(const std::string& prefix, int from, int to) {
  std::vector<std::string> out;
  for (int i = from; i < to; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("top, bottom and tie-break examples") {
    const std::vector<ScoredDocument> s{scored("b", 0.5), scored("a", 0.9), scored("c", 0.1)};
    CHECK(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 2)) == ids({"a", "b"}));
    CHECK(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kLowest, 1)) == ids({"c"}));
    const std::vector<ScoredDocument> tie{scored("b", 0.5), scored("a", 0.5)};
    CHECK(davir::select(tie, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 1)) == ids({"a"}));
    CHECK(davir::select(tie, spec(SelectionMetric::kDavir, SelectionDirection::kLowest, 1)) == ids({"a"}));
  }

  TEST_CASE("rho metric ranks by the unnormalised score") {
    const std::vector<ScoredDocument> s{scored("a", 0.9, 1.0), scored("b", 0.1, 5.0), scored("c", std::nullopt, 3.0)};
    CHECK(davir::select(s, spec(SelectionMetric::kRhoLm, SelectionDirection::kHighest, 2)) == ids({"b", "c"}));
  }

  TEST_CASE("null scores are skipped and k is clamped") {
    const std::vector<ScoredDocument> s{scored("a", 0.2), scored("b", std::nullopt), scored("c", 0.4)};
    CHECK(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 10)) == ids({"c", "a"}));
  }

  TEST_CASE("invalid requests") {
    const std::vector<ScoredDocument> s{scored("a", 0.2)};
    CHECK_THROWS_AS(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 0)), std::invalid_argument);
    CHECK_THROWS_AS(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, -3)), std::invalid_argument);
    CHECK_THROWS_AS(davir::select({}, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 1)), davir::DegenerateInputError);
    const std::vector<ScoredDocument> none{scored("a", std::nullopt)};
    CHECK_THROWS_AS(davir::select(none, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 1)), davir::DegenerateInputError);
  }

  TEST_CASE("k = n returns everything by value then id, and is repeatable") {
    davir::Rng rng(1);
    std::vector<ScoredDocument> s;
    for (int i = 0; i < 300; ++i)
      s.push_back(scored("d" + std::to_string(i), static_cast<double>(rng.uniform_index(50)) / 50.0));
    const auto all = davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 300));
    REQUIRE(all.size() == 300);
    std::map<std::string, double> value;
    for (const auto& d : s) value[d.id] = *d.davir;
    for (std::size_t i = 1; i < all.size(); ++i) {
      const double a = value[all[i - 1]], b = value[all[i]];
      CHECK((a > b || (a == b && all[i - 1] < all[i])));
    }
    CHECK(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 300)) == all);
    std::mt19937_64 g(3);
    std::shuffle(s.begin(), s.end(), g);
    CHECK(davir::select(s, spec(SelectionMetric::kDavir, SelectionDirection::kHighest, 300)) == all);
  }

  TEST_CASE("random selection depends only on the seed and the id set") {
    std::vector<ScoredDocument> s;
    for (int i = 0; i < 500; ++i) s.push_back(scored("r" + std::to_string(i), 0.1 * i));
    const auto pick = davir::select(s, spec(SelectionMetric::kRandom, SelectionDirection::kHighest, 50, 42));
    CHECK(pick.size() == 50);
    CHECK(std::set<std::string>(pick.begin(), pick.end()).size() == 50);
    CHECK(std::is_sorted(pick.begin(), pick.end()));
    for (int trial = 0; trial < 5; ++trial) {
      std::mt19937_64 g(trial);
      std::shuffle(s.begin(), s.end(), g);
      CHECK(davir::select(s, spec(SelectionMetric::kRandom, SelectionDirection::kLowest, 50, 42)) == pick);
    }
    CHECK(davir::select(s, spec(SelectionMetric::kRandom, SelectionDirection::kHighest, 50, 43)) != pick);
  }

  TEST_CASE("random selection is roughly uniform") {
    std::vector<ScoredDocument> s;
    for (int i = 0; i < 20; ++i) s.push_back(scored("u" + std::to_string(i), 0.0));
    std::map<std::string, int> hits;
    const int trials = 4000;
    for (int seed = 0; seed < trials; ++seed)
      for (const auto& id : davir::select(s, spec(SelectionMetric::kRandom, SelectionDirection::kHighest, 5, seed))) ++hits[id];
    // Each id is expected 1000 times; sd is about 27.
    for (const auto& [id, n] : hits) CHECK(std::abs(n - 1000) < 150);
  }

  TEST_CASE("overlap counts and fractions") {
    const auto a = numbered("x", 0, 800);
    auto b = numbered("x", 284, 800);  // 516 shared
    const auto extra = numbered("y", 0, 284);
    b.insert(b.end(), extra.begin(), extra.end());
    const auto o = davir::selection_overlap(a, b);
    CHECK(o.count == 516);
    CHECK(o.fraction == 0.645);
    CHECK(davir::selection_overlap(a, a).count == 800);
    CHECK(davir::selection_overlap(a, a).fraction == 1.0);
    CHECK(davir::selection_overlap(a, extra).count == 0);
    CHECK(davir::selection_overlap(a, extra).fraction == 0.0);
  }

  TEST_CASE("published overlap table is arithmetically consistent") {
    const std::vector<std::pair<int, int>> rows{{800, 516},    {1600, 1111}, {3200, 2399}, {6400, 5123},
                                                {9600, 8033},  {26000, 24358}, {39000, 38075}};
    const std::vector<double> percent{64.5, 69.4, 74.9, 80.0, 83.7, 93.7, 97.6};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto [n, shared] = rows[i];
      const auto a = numbered("s", 0, n);
      auto b = numbered("s", n - shared, n);
      const auto other = numbered("t", 0, n - shared);
      b.insert(b.end(), other.begin(), other.end());
      const auto o = davir::selection_overlap(a, b);
      CHECK(o.count == static_cast<std::size_t>(shared));
      // The table mixes rounding and truncation to one decimal.
      const double pct = 100.0 * o.fraction;
      const bool rounded = std::abs(pct - percent[i]) <= 0.05 + 1e-9;
      const bool truncated = pct >= percent[i] - 1e-9 && pct < percent[i] + 0.1;
      CHECK((rounded || truncated));
    }
  }

  TEST_CASE("filtering keeps id-list order and rejects unknown ids") {
    const std::vector<Document> corpus{{"a", "", "1", {}}, {"b", "", "2", {}}, {"c", "", "3", {}}};
    const auto out = davir::filter_corpus(corpus, ids({"c", "a"}));
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == "c");
    CHECK(out[1].response == "1");
    CHECK_THROWS_AS(davir::filter_corpus(corpus, ids({"zz"})), davir::ValidationError);
  }

  TEST_CASE("id lists round-trip") {
    TempDir dir;
    const auto list = ids({"b", "a b", "é", "c"});
    davir::write_id_list(dir / "ids.txt", list);
    CHECK(davir::read_id_list(dir / "ids.txt") == list);
    CHECK_THROWS_AS(davir::write_id_list(dir / "bad.txt", ids({"x\ny"})), davir::ValidationError);
  }

  TEST_CASE("mixing a full corpus with a selected subset") {
    TempDir dir;
    std::vector<Document> a, b;
    std::vector<ScoredDocument> a_scores;
    davir::Rng rng(5);
    for (int i = 0; i < 4000; ++i) {
      a.push_back({"alpaca-" + std::to_string(i), "p", "r", {}});
      a_scores.push_back(scored(a.back().id, rng.uniform01()));
    }
    for (int i = 0; i < 7500; ++i) b.push_back({"gsm-" + std::to_string(i), "p", "r", {}});
    davir::write_corpus(dir / "a.jsonl", a);
    davir::write_scores(dir / "a.scores.jsonl", a_scores);
    davir::write_corpus(dir / "b.jsonl", b);
    davir::testing::write_text(dir / "mix.json", R"({
      "components": [
        {"corpus": "b.jsonl", "name": "gsm"},
        {"corpus": "a.jsonl", "name": "alpaca", "scores": "a.scores.jsonl",
         "select": {"metric": "davir", "direction": "highest", "k": 3200}}
      ],
      "output": "mixed.jsonl"
    })");
    const auto spec = davir::read_mix_spec(dir / "mix.json");
    CHECK(spec.output == dir / "mixed.jsonl");
    davir::MixStats stats;
    const auto mixed = davir::mix(spec, false, &stats);
    CHECK(mixed.size() == 10700);
    CHECK(stats.per_component == std::vector<std::size_t>{7500, 3200});
    const double share = 3200.0 / static_cast<double>(mixed.size());
    CHECK(std::round(share * 1000.0) / 10.0 == 29.9);
    CHECK(mixed.front().tags == std::vector<std::string>{"source:gsm"});
    CHECK(mixed.back().tags == std::vector<std::string>{"source:alpaca"});
    const auto top = davir::select(a_scores, spec.components[1].selection.value());
    const std::set<std::string> expected(top.begin(), top.end());
    for (std::size_t i = 7500; i < mixed.size(); ++i) CHECK(expected.count(mixed[i].id) == 1);
    CHECK(std::is_sorted(mixed.begin(), mixed.begin() + 7500,
                         [](const Document& x, const Document& y) { return x.id < y.id; }));
  }

  TEST_CASE("single component copies every document") {
    TempDir dir;
    const std::vector<Document> docs{{"a", "p", "r1", {"t"}}, {"b", "q", "r2", {}}};
    davir::write_corpus(dir / "c.jsonl", docs);
    davir::MixSpec spec;
    spec.components.push_back({dir / "c.jsonl", "only", {}, std::nullopt});
    const auto out = davir::mix(spec, false);
    REQUIRE(out.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(out[i].id == docs[i].id);
      CHECK(out[i].prompt == docs[i].prompt);
      CHECK(out[i].response == docs[i].response);
      CHECK(out[i].tags.back() == "source:only");
    }
  }

  TEST_CASE("colliding ids fail unless renaming is allowed") {
    TempDir dir;
    davir::write_corpus(dir / "x.jsonl", std::vector<Document>{{"dup", "", "x", {}}, {"x1", "", "x", {}}});
    davir::write_corpus(dir / "y.jsonl", std::vector<Document>{{"dup", "", "y", {}}, {"x/dup", "", "y", {}}});
    davir::MixSpec spec;
    spec.components.push_back({dir / "x.jsonl", "x", {}, std::nullopt});
    spec.components.push_back({dir / "y.jsonl", "y", {}, std::nullopt});
    try {
      davir::mix(spec, false);
      FAIL("expected a collision error");
    } catch (const davir::ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("dup") != std::string::npos);
      CHECK(msg.find("x") != std::string::npos);
      CHECK(msg.find("y") != std::string::npos);
    }
    davir::MixStats stats;
    const auto out = davir::mix(spec, true, &stats);
    std::vector<std::string> got;
    for (const auto& d : out) got.push_back(d.id);
    CHECK(got == ids({"dup", "x1", "y/dup", "x/dup"}));
    CHECK(stats.renamed == 1);
    CHECK(stats.dropped_duplicates == 0);
  }

  TEST_CASE("malformed mix specs") {
    TempDir dir;
    davir::testing::write_text(dir / "empty.json", R"({"components": []})");
    CHECK_THROWS_AS(davir::read_mix_spec(dir / "empty.json"), davir::ValidationError);
    davir::testing::write_text(dir / "bad.json", R"({"components": [{"corpus": "c.jsonl", "select": {"k": 3}}]})");
    CHECK_THROWS_AS(davir::read_mix_spec(dir / "bad.json"), davir::ValidationError);
    CHECK_THROWS_AS(davir::read_mix_spec(dir / "missing.json"), davir::IoError);
  }
}
