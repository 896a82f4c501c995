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
#include <cstring>
#include <string>
#include <vector>

#include "davir/error.hpp"
#include "davir/length_diagnostics.hpp"
#include "davir/rng.hpp"
#include "davir/scoring.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using davir::LengthStatistic;
using davir::ScoredDocument;

namespace {

// Textbook product-moment formula in extended precision.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Rank of each value = 1 + #smaller + (#equal - 1) / 2, counted directly.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

std::vector<double> random_vector(davir::Rng& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? static_cast<double>(rng.uniform_index(n / 4 + 2)) : rng.normal();
  return v;
}

ScoredDocument scored(std::string id, std::size_t n, double davir) {
  ScoredDocument s;
  s.id = std::move(id);
  s.n_tokens = n;
  s.loss_base = 1.0;
  s.loss_ref = 1.0 - davir;
  s.rho_lm = davir;
  s.davir = davir;
  return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("length_diagnostics") {
  TEST_CASE("pearson worked values") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{3, 2, 1};
    CHECK(davir::pearson(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(davir::pearson(a, b) == doctest::Approx(-1.0).epsilon(1e-15));
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{1, 3, 2, 5};
    // Hand value: sxy = 5.5, sxx = 5, syy = 8.75.
    CHECK(std::abs(davir::pearson(x, y) - 5.5 / std::sqrt(5.0 * 8.75)) <= 1e-12);
    CHECK(std::abs(davir::pearson(x, y) - oracle_pearson(x, y)) <= 1e-12);
  }

  TEST_CASE("spearman worked values") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{2, 1, 4, 3};
    CHECK(std::abs(davir::spearman(x, y) - 0.6) <= 1e-12);
    const std::vector<double> tied{1, 2, 2, 3};
    CHECK(davir::average_ranks(tied) == std::vector<double>{1, 2.5, 2.5, 4});
    const std::vector<double> up{0.1, 5, 7, 100};
    CHECK(davir::spearman(x, up) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("errors for unusable input") {
    const std::vector<double> one{1};
    const std::vector<double> two{1, 2};
    const std::vector<double> three{1, 2, 3};
    const std::vector<double> flat{4, 4, 4};
    CHECK_THROWS_AS(davir::pearson(two, three), davir::ValidationError);
    CHECK_THROWS_AS(davir::pearson(one, one), davir::DegenerateInputError);
    CHECK_THROWS_AS(davir::pearson(flat, three), davir::DegenerateInputError);
    CHECK_THROWS_AS(davir::spearman(three, flat), davir::DegenerateInputError);
    const std::vector<double> nan{1, std::nan(""), 3};
    CHECK_THROWS_AS(davir::pearson(nan, three), davir::ValidationError);
  }

  TEST_CASE("both correlations match brute-force oracles") {
    davir::Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(400);
      const bool ties = trial % 2 == 0;
      auto x = random_vector(rng, n, ties);
      auto y = random_vector(rng, n, ties);
      x[0] += 1.0;  // never constant
      y[1] += 1.0;
      CHECK(std::abs(davir::pearson(x, y) - oracle_pearson(x, y)) <= 1e-12);
      CHECK(std::abs(davir::spearman(x, y) - oracle_spearman(x, y)) <= 1e-12);
      CHECK(davir::average_ranks(x) == oracle_ranks(x));
    }
  }

  TEST_CASE("pearson is exactly symmetric and bounded") {
    davir::Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(200);
      auto x = random_vector(rng, n, false);
      auto y = trial % 3 == 0 ? x : random_vector(rng, n, false);
      if (trial % 3 == 0) y[0] += 1e-9;
      const double r = davir::pearson(x, y);
      CHECK(same_bits(r, davir::pearson(y, x)));
      CHECK(std::abs(r) <= 1.0 + 1e-12);
      CHECK(std::abs(davir::spearman(x, y)) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("spearman ignores strictly monotone transforms") {
    davir::Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 3 + rng.uniform_index(100);
      auto x = random_vector(rng, n, true);
      auto y = random_vector(rng, n, true);
      x[0] = -1.0;
      y[0] = -1.0;
      std::vector<double> fx(x), gy(y);
      for (auto& v : fx) v = std::exp(v / 10.0);
      for (auto& v : gy) v = -1.0 / (v + 2.0);  // increasing on v > -2
      CHECK(std::abs(davir::spearman(fx, gy) - davir::spearman(x, y)) <= 1e-12);
    }
  }

  TEST_CASE("without ties spearman equals the rank-difference formula") {
    davir::Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(300);
      const auto x = random_vector(rng, n, false);
      const auto y = random_vector(rng, n, false);
      const auto rx = oracle_ranks(x), ry = oracle_ranks(y);
      double d2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
      const double nn = static_cast<double>(n);
      CHECK(std::abs(davir::spearman(x, y) - (1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0)))) <= 1e-12);
    }
  }

  TEST_CASE("constant statistic is reported as undefined") {
    const std::vector<ScoredDocument> docs{scored("a", 3, 0.2), scored("b", 9, 0.2), scored("c", 5, 0.2)};
    try {
      davir::length_report(docs, LengthStatistic::kDavir);
      FAIL("expected an error");
    } catch (const davir::DegenerateInputError& e) {
      CHECK(std::string(e.what()) == "undefined (constant statistic)");
    }
  }

  TEST_CASE("decaying per-token loss makes mean loss fall with length") {
    davir::Rng rng(3);
    std::vector<ScoredDocument> docs;
    for (int i = 0; i < 200; ++i) {
      const std::size_t n = 5 + rng.uniform_index(496);
      std::vector<double> nll(n);
      for (std::size_t t = 0; t < n; ++t) nll[t] = 1.0 / (1.0 + static_cast<double>(t));
      docs.push_back(davir::score_record({"d" + std::to_string(i), nll, nll, std::nullopt},
                                         davir::AggregationMode::kSum));
    }
    const auto r = davir::length_report(docs, LengthStatistic::kMeanLossBase);
    CHECK(r.pearson < 0.0);
    CHECK(r.spearman < 0.0);
    CHECK(r.against == "n_tokens");
    CHECK(r.statistic_name == "mean_loss_base");
  }

  TEST_CASE("documents without the statistic are excluded and counted") {
    std::vector<ScoredDocument> docs{scored("a", 3, 0.1), scored("b", 9, 0.5), scored("c", 5, 0.3)};
    docs[1].davir.reset();
    auto r = davir::length_report(docs, LengthStatistic::kDavir);
    CHECK(r.n == 2);
    CHECK(r.excluded == 1);
    docs[0].davir.reset();
    CHECK_THROWS_AS(davir::length_report(docs, LengthStatistic::kDavir), davir::DegenerateInputError);
  }

  TEST_CASE("rank profile orders by value then id") {
    const std::vector<ScoredDocument> docs{scored("c", 30, 0.1), scored("a", 10, 0.9), scored("b", 20, 0.5)};
    const auto p = davir::rank_length_profile(docs, LengthStatistic::kDavir);
    REQUIRE(p.size() == 3);
    CHECK(p[0].rank == 1);
    CHECK(p[0].n_tokens == 10);
    CHECK(p[1].n_tokens == 20);
    CHECK(p[2].n_tokens == 30);
    const std::vector<ScoredDocument> tied{scored("y", 1, 0.5), scored("x", 2, 0.5)};
    const auto t = davir::rank_length_profile(tied, LengthStatistic::kDavir);
    CHECK(t[0].id == "x");
    CHECK(t[1].id == "y");
  }

  TEST_CASE("rank profile CSV round-trips") {
    davir::testing::TempDir dir;
    davir::Rng rng(4);
    std::vector<ScoredDocument> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(scored("id,\"" + std::to_string(i), 1 + rng.uniform_index(99), rng.uniform(-1, 1)));
    const auto p = davir::rank_length_profile(docs, LengthStatistic::kRhoLm);
    davir::write_rank_profile_csv(dir / "p.csv", p);
    const auto back = davir::read_rank_profile_csv(dir / "p.csv");
    REQUIRE(back.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(back[i].rank == p[i].rank);
      CHECK(back[i].id == p[i].id);
      CHECK(back[i].n_tokens == p[i].n_tokens);
      CHECK(same_bits(back[i].value, p[i].value));
    }
  }

  TEST_CASE("statistic names") {
    for (auto s : {LengthStatistic::kLossBase, LengthStatistic::kLossRef, LengthStatistic::kMeanLossBase,
                   LengthStatistic::kMeanEntropyBase, LengthStatistic::kRhoLm, LengthStatistic::kDavir})
      CHECK(davir::parse_length_statistic(davir::to_string(s)) == s);
  }
}
