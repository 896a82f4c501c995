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

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "davir/corpus_io.hpp"
#include "davir/error.hpp"
#include "davir/rng.hpp"
#include "davir/toy_lm.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using davir::Document;
using davir::toylm::FitOptions;
using davir::toylm::kBos;
using davir::toylm::kEos;
using davir::toylm::NGramModel;

namespace {

// Brute-force reference: plain maps of transition counts, probabilities
// evaluated straight from the add-lambda formula.
struct CountOracle {
  int order;
  double lambda;
  std::map<std::u32string, std::map<char32_t, int>> counts;
  std::set<char32_t> vocab{kBos, kEos};

  static std::u32string widen(const std::string& ascii) { return {ascii.begin(), ascii.end()}; }

  std::u32string sequence(const Document& d) const {
    return std::u32string(static_cast<std::size_t>(order), kBos) + widen(d.prompt) +
           widen(d.response) + std::u32string(1, kEos);
  }

  CountOracle(const std::vector<Document>& docs, int n, double l) : order(n), lambda(l) {
    for (const auto& d : docs) {
      const auto s = sequence(d);
      for (std::size_t t = static_cast<std::size_t>(order); t < s.size(); ++t) {
        counts[s.substr(t - order, order)][s[t]] += 1;
        vocab.insert(s[t]);
      }
    }
  }

  double p(const std::u32string& ctx, char32_t next) const {
    double c = 0, total = 0;
    if (auto it = counts.find(ctx); it != counts.end()) {
      for (const auto& [sym, k] : it->second) {
        total += k;
        if (sym == next) c = k;
      }
    }
    return (c + lambda) / (total + lambda * static_cast<double>(vocab.size()));
  }

  std::vector<double> nll(const Document& d) const {
    const auto s = sequence(d);
    const std::size_t start = static_cast<std::size_t>(order) + d.prompt.size();
    std::vector<double> out;
    for (std::size_t t = start; t < s.size(); ++t) out.push_back(-std::log(p(s.substr(t - order, order), s[t])));
    return out;
  }
};

std::vector<Document> random_ascii_corpus(davir::Rng& rng, std::size_t n, const std::string& alphabet) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    auto text = [&](std::size_t lo, std::size_t hi) {
      std::string s;
      const std::size_t len = lo + rng.uniform_index(hi - lo + 1);
      for (std::size_t j = 0; j < len; ++j) s += alphabet[rng.uniform_index(alphabet.size())];
      return s;
    };
    docs.push_back({"d" + std::to_string(i), text(0, 8), text(1, 30), {}});
  }
  return docs;
}

}  // namespace

TEST_SUITE("toy_lm") {
  TEST_CASE("hand-counted bigram table") {
    const std::vector<Document> docs{{"x", "a", "b", {}}};
    const auto m = NGramModel::fit(docs, FitOptions{1, 1.0, {}});
    CHECK(m.vocab_size() == 4);
    // Transitions: BOS->a, a->b, b->EOS; each context total is 1.
    CHECK(m.probability(U"a", U'b') == doctest::Approx(2.0 / 5.0).epsilon(1e-15));
    CHECK(m.probability(U"a", U'a') == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
    CHECK(m.probability(U"b", U'a') == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
    const auto nll = m.score_nll(docs[0]);
    REQUIRE(nll.size() == 2);  // "b" then EOS
    CHECK(nll[0] == doctest::Approx(-std::log(0.4)).epsilon(1e-15));
    CHECK(nll[0] == doctest::Approx(0.9163).epsilon(1e-4));
    CHECK(nll[1] == doctest::Approx(-std::log(0.4)).epsilon(1e-15));
  }

  TEST_CASE("probabilities and NLLs agree with the brute-force counter") {
    davir::Rng rng(21);
    for (int order : {1, 2, 3}) {
      for (double lambda : {0.01, 0.1, 1.0}) {
        const auto docs = random_ascii_corpus(rng, 40, "abcd ");
        const auto m = NGramModel::fit(docs, FitOptions{order, lambda, {}});
        const CountOracle oracle(docs, order, lambda);
        CHECK(m.vocab_size() == oracle.vocab.size());
        for (const auto& d : docs) {
          const auto got = m.score_nll(d);
          const auto want = oracle.nll(d);
          REQUIRE(got.size() == want.size());
          for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
        }
      }
    }
  }

  TEST_CASE("every context distribution sums to one") {
    davir::Rng rng(4);
    const auto docs = random_ascii_corpus(rng, 30, "xyz");
    const auto m = NGramModel::fit(docs, FitOptions{2, 0.1, {}});
    const CountOracle oracle(docs, 2, 0.1);
    auto contexts = oracle.counts;
    contexts[U"qq"];  // never observed
    for (const auto& [ctx, unused] : contexts) {
      double total = 0.0;
      for (char32_t s : m.vocab()) {
        const double p = m.probability(ctx, s);
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("unseen pair gets the smoothing floor") {
    const std::vector<Document> docs{{"x", "", "ab", {}}};
    const auto m = NGramModel::fit(docs, FitOptions{1, 1.0, {}});
    // Context b was followed only by EOS.
    CHECK(m.probability(U"b", U'a') == doctest::Approx(1.0 / (1.0 + 4.0)).epsilon(1e-15));
  }

  TEST_CASE("uniform model scores ln|V| everywhere") {
    const auto m = NGramModel::uniform(3, 0.1, U"abc");
    const Document d{"u", "cab", "abcabc", {}};
    for (double v : m.score_nll(d)) CHECK(v == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    for (double h : m.per_position_entropy(d)) CHECK(h == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  }

  TEST_CASE("memorised text approaches zero loss and zero entropy") {
    const std::vector<Document> docs{{"x", "q", "abcd", {}}};
    const auto m = NGramModel::fit(docs, FitOptions{1, 1e-12, {}});
    for (double v : m.score_nll(docs[0])) CHECK(v < 1e-9);
    for (double h : m.per_position_entropy(docs[0])) CHECK(h < 1e-9);
  }

  TEST_CASE("entropy matches direct summation and stays within [0, ln|V|]") {
    davir::Rng rng(8);
    const auto docs = random_ascii_corpus(rng, 25, "abcdef");
    const auto m = NGramModel::fit(docs, FitOptions{2, 0.3, {}});
    const double ln_v = std::log(static_cast<double>(m.vocab_size()));
    for (const auto& d : docs) {
      const auto h = m.per_position_entropy(d);
      const auto seq = std::u32string(2, kBos) + CountOracle::widen(d.prompt) + CountOracle::widen(d.response) +
                       std::u32string(1, kEos);
      const std::size_t start = 2 + d.prompt.size();
      REQUIRE(h.size() == seq.size() - start);
      for (std::size_t t = start; t < seq.size(); ++t) {
        const auto ctx = seq.substr(t - 2, 2);
        double direct = 0.0;
        for (char32_t s : m.vocab()) {
          const double p = m.probability(ctx, s);
          direct -= p * std::log(p);
        }
        CHECK(h[t - start] == doctest::Approx(direct).epsilon(1e-12));
        CHECK(h[t - start] >= 0.0);
        CHECK(h[t - start] <= ln_v + 1e-12);
      }
    }
  }

  TEST_CASE("NLL sum equals minus log of the probability product") {
    davir::Rng rng(12);
    const auto docs = random_ascii_corpus(rng, 30, "ab c");
    const auto m = NGramModel::fit(docs, FitOptions{3, 0.1, {}});
    for (const auto& d : docs) {
      const auto nll = m.score_nll(d);
      const auto seq = std::u32string(3, kBos) + CountOracle::widen(d.prompt) + CountOracle::widen(d.response) +
                       std::u32string(1, kEos);
      long double product = 1.0L;
      for (std::size_t t = 3 + d.prompt.size(); t < seq.size(); ++t)
        product *= m.probability(seq.substr(t - 3, 3), seq[t]);
      const double sum = std::accumulate(nll.begin(), nll.end(), 0.0);
      CHECK(std::abs(sum + static_cast<double>(std::log(product))) <= 1e-9);
    }
  }

  TEST_CASE("response length plus EOS") {
    const std::vector<Document> docs{{"x", "héllo", "wörld 😀", {}}};
    const auto m = NGramModel::fit(docs, FitOptions{});
    CHECK(m.score_nll(docs[0]).size() == 8);
    CHECK(m.contains(U'😀'));
  }

  TEST_CASE("symbols outside the vocabulary are rejected") {
    const std::vector<Document> docs{{"x", "a", "b", {}}};
    const auto m = NGramModel::fit(docs, FitOptions{1, 0.1, {}});
    CHECK_THROWS_AS(m.score_nll({"y", "a", "z", {}}), davir::ValidationError);
    const auto wide = NGramModel::fit(docs, FitOptions{1, 0.1, U"z"});
    CHECK_NOTHROW(wide.score_nll({"y", "a", "z", {}}));
    CHECK_THROWS_AS(m.score_nll({"y", "a", "", {}}), davir::ValidationError);
  }

  TEST_CASE("parameter and input checks") {
    const std::vector<Document> docs{{"x", "a", "b", {}}};
    CHECK_THROWS_AS(NGramModel::fit(docs, FitOptions{0, 0.1, {}}), std::invalid_argument);
    CHECK_THROWS_AS(NGramModel::fit(docs, FitOptions{2, 0.0, {}}), std::invalid_argument);
    CHECK_THROWS_AS(NGramModel::fit({}, FitOptions{}), davir::DegenerateInputError);
    const auto m = NGramModel::fit(docs, FitOptions{});
    for (double w : {0.0, -0.5, 1.5, std::nan("")})
      CHECK_THROWS_AS(m.finetune(docs, w), std::invalid_argument);
    CHECK_THROWS_AS(m.finetune({}, 0.5), davir::DegenerateInputError);
    CHECK_THROWS_AS(davir::toylm::decode_utf8("\xc3"), davir::ValidationError);
    CHECK_THROWS_AS(davir::toylm::decode_utf8("\xed\xa0\x80"), davir::ValidationError);
    CHECK(davir::toylm::decode_utf8("aé中😀") == U"aé中😀");
  }

  TEST_CASE("full mix weight reduces to fitting the new corpus") {
    davir::Rng rng(31);
    const auto base_docs = random_ascii_corpus(rng, 20, "ab");
    const auto full = random_ascii_corpus(rng, 30, "abc");
    const FitOptions opts{2, 0.1, {}};
    const auto base = NGramModel::fit(base_docs, opts);
    CHECK(base.finetune(full, 1.0) == NGramModel::fit(full, opts));
    // With a wider base vocabulary the counts still match; only |V| differs.
    const auto wide_base = NGramModel::fit(random_ascii_corpus(rng, 20, "abz"), opts);
    const auto tuned = wide_base.finetune(full, 1.0);
    const auto refit = NGramModel::fit(full, FitOptions{2, 0.1, U"z"});
    for (const auto& d : full) {
      const auto a = tuned.score_nll(d);
      const auto b = refit.score_nll(d);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    }
  }

  TEST_CASE("half weight on the base corpus is a fixed point") {
    davir::Rng rng(32);
    const auto docs = random_ascii_corpus(rng, 40, "abcd");
    const auto base = NGramModel::fit(docs, FitOptions{});
    const auto tuned = base.finetune(docs, 0.5);
    for (const auto& d : docs) {
      const auto a = base.score_nll(d);
      const auto b = tuned.score_nll(d);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }

  TEST_CASE("fine-tuning lowers loss on the fine-tuning corpus") {
    // Base and fine-tuning text come from different seeded styles.
    int per_doc_violations = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      davir::toylm::SynthOptions so;
      so.n_docs = 40;
      so.max_response = 80;
      so.seed = seed;
      const auto base_docs = davir::toylm::synthesize_corpus(so);
      so.seed = seed + 10'000;
      so.id_prefix = "ft";
      const auto ft_docs = davir::toylm::synthesize_corpus(so);
      const auto base = NGramModel::fit(base_docs, FitOptions{});
      const auto ref = base.finetune(ft_docs, 0.9);
      double sum_base = 0.0, sum_ref = 0.0;
      for (const auto& d : ft_docs) {
        const auto nb = base.score_nll(d);
        const auto nr = ref.score_nll(d);
        const double lb = std::accumulate(nb.begin(), nb.end(), 0.0);
        const double lr = std::accumulate(nr.begin(), nr.end(), 0.0);
        if (lr > lb + 1e-9) ++per_doc_violations;
        sum_base += lb;
        sum_ref += lr;
      }
      CHECK(sum_ref < sum_base);
    }
    CHECK(per_doc_violations == 0);
  }

  TEST_CASE("save and load round-trip") {
    davir::testing::TempDir dir;
    davir::Rng rng(2);
    auto docs = random_ascii_corpus(rng, 20, "ab");
    for (auto& d : docs) d.response += "é";
    const auto m = NGramModel::fit(docs, FitOptions{2, 0.25, U"中"}).finetune(docs, 0.3);
    m.save(dir / "m.json");
    const auto back = NGramModel::load(dir / "m.json");
    CHECK(back == m);
    back.save(dir / "m2.json");
    CHECK(davir::testing::read_text(dir / "m.json") == davir::testing::read_text(dir / "m2.json"));
    davir::testing::write_text(dir / "bad.json", "{\"format\":\"other\"}");
    CHECK_THROWS_AS(NGramModel::load(dir / "bad.json"), davir::ValidationError);
  }

  TEST_CASE("corpus scoring is id-sorted and independent of worker count") {
    davir::toylm::SynthOptions so;
    so.n_docs = 120;
    so.seed = 77;
    auto docs = davir::toylm::synthesize_corpus(so);
    std::reverse(docs.begin(), docs.end());
    const auto m = NGramModel::fit(docs, FitOptions{});
    const auto one = m.score_corpus(docs, true, 1);
    CHECK(std::is_sorted(one.begin(), one.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
    for (std::size_t w : {2u, 3u, 8u}) CHECK(m.score_corpus(docs, true, w) == one);
  }

  TEST_CASE("synthetic corpora are seeded and respect length bounds") {
    davir::toylm::SynthOptions so;
    so.n_docs = 300;
    so.min_response = 5;
    so.max_response = 500;
    so.seed = 1;
    const auto a = davir::toylm::synthesize_corpus(so);
    CHECK(a == davir::toylm::synthesize_corpus(so));
    so.seed = 2;
    CHECK_FALSE(a == davir::toylm::synthesize_corpus(so));
    std::set<std::string> ids;
    for (const auto& d : a) {
      CHECK(d.response.size() >= 5);
      CHECK(d.response.size() <= 500);
      ids.insert(d.id);
    }
    CHECK(ids.size() == a.size());
  }
}
