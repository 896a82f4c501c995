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

#include "davir/length_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "davir/error.hpp"
#include "davir/io.hpp"

namespace davir {

namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw ValidationError("correlation inputs differ in length (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  if (xs.size() < 2) throw DegenerateInputError("correlation needs at least 2 samples");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw ValidationError("correlation inputs must be finite");
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  // Two-pass centred sums. sxy is accumulated as dx*dy with dx from xs, and
  // multiplication commutes exactly, so swapping the arguments gives the
  // same bits.
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateInputError("undefined (constant statistic)");
  const double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_pair(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

LengthStatistic parse_length_statistic(std::string_view name) {
  if (name == "loss_base") return LengthStatistic::kLossBase;
  if (name == "loss_ref") return LengthStatistic::kLossRef;
  if (name == "mean_loss_base") return LengthStatistic::kMeanLossBase;
  if (name == "mean_entropy_base") return LengthStatistic::kMeanEntropyBase;
  if (name == "rho_lm") return LengthStatistic::kRhoLm;
  if (name == "davir") return LengthStatistic::kDavir;
  throw std::invalid_argument("unknown statistic '" + std::string(name) + "'");
}

std::string_view to_string(LengthStatistic statistic) {
  switch (statistic) {
    case LengthStatistic::kLossBase: return "loss_base";
    case LengthStatistic::kLossRef: return "loss_ref";
    case LengthStatistic::kMeanLossBase: return "mean_loss_base";
    case LengthStatistic::kMeanEntropyBase: return "mean_entropy_base";
    case LengthStatistic::kRhoLm: return "rho_lm";
    case LengthStatistic::kDavir: return "davir";
  }
  return "unknown";
}

std::optional<double> statistic_value(const ScoredDocument& doc, LengthStatistic statistic) {
  switch (statistic) {
    case LengthStatistic::kLossBase: return doc.loss_base;
    case LengthStatistic::kLossRef: return doc.loss_ref;
    case LengthStatistic::kMeanLossBase: return doc.mean_loss_base;
    case LengthStatistic::kMeanEntropyBase: return doc.mean_entropy_base;
    case LengthStatistic::kRhoLm: return doc.rho_lm;
    case LengthStatistic::kDavir: return doc.davir;
  }
  return std::nullopt;
}

CorrelationReport length_report(std::span<const ScoredDocument> scored,
                                LengthStatistic statistic) {
  CorrelationReport report;
  report.statistic_name = std::string(to_string(statistic));
  report.against = "n_tokens";
  std::vector<double> values, lengths;
  for (const auto& doc : scored) {
    auto v = statistic_value(doc, statistic);
    if (!v) {
      ++report.excluded;
      continue;
    }
    values.push_back(*v);
    lengths.push_back(static_cast<double>(doc.n_tokens));
  }
  if (values.size() < 2)
    throw DegenerateInputError("length report needs at least 2 documents with a " +
                               report.statistic_name + " value");
  report.n = values.size();
  report.pearson = pearson(values, lengths);
  report.spearman = spearman(values, lengths);
  return report;
}

std::vector<RankLength> rank_length_profile(std::span<const ScoredDocument> scored,
                                            LengthStatistic statistic) {
  std::vector<RankLength> out;
  for (const auto& doc : scored) {
    if (auto v = statistic_value(doc, statistic))
      out.push_back({0, doc.n_tokens, doc.id, *v});
  }
  std::sort(out.begin(), out.end(), [](const RankLength& a, const RankLength& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

namespace {

// Ids are quoted when they contain a delimiter, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

void write_rank_profile_csv(const std::filesystem::path& path,
                            std::span<const RankLength> profile) {
  io::AtomicFileWriter writer(path);
  writer.stream() << "rank,n_tokens,id,value\n";
  for (const auto& r : profile)
    writer.stream() << r.rank << ',' << r.n_tokens << ',' << csv_field(r.id) << ','
                    << io::format_double(r.value) << '\n';
  writer.commit();
}

std::vector<RankLength> read_rank_profile_csv(const std::filesystem::path& path) {
  io::LineReader lines(path);
  auto header = lines.next();
  if (!header || *header != "rank,n_tokens,id,value")
    throw ValidationError(path.string() + ": missing rank profile header");
  std::vector<RankLength> out;
  while (auto line = lines.next()) {
    auto f = split_csv(std::string(*line));
    if (f.size() != 4)
      throw ValidationError(path.string() + ":" + std::to_string(lines.line_number()) +
                            ": expected 4 fields");
    try {
      out.push_back({std::stoul(f[0]), std::stoul(f[1]), f[2], std::stod(f[3])});
    } catch (const std::logic_error&) {
      throw ValidationError(path.string() + ":" + std::to_string(lines.line_number()) +
                            ": malformed number");
    }
  }
  return out;
}

}  // namespace davir
