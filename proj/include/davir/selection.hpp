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

#ifndef DAVIR_SELECTION_HPP
#define DAVIR_SELECTION_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "davir/corpus_io.hpp"

namespace davir {

enum class SelectionMetric { kDavir, kRhoLm, kRandom };
enum class SelectionDirection { kHighest, kLowest };

SelectionMetric parse_selection_metric(std::string_view name);
SelectionDirection parse_selection_direction(std::string_view name);
std::string_view to_string(SelectionMetric metric);
std::string_view to_string(SelectionDirection direction);

struct SelectionSpec {
  SelectionMetric metric = SelectionMetric::kDavir;
  SelectionDirection direction = SelectionDirection::kHighest;  // ignored for kRandom
  std::int64_t k = 1;
  std::uint64_t seed = 0;  // kRandom only
};

/// Ids of the selected documents, at most k of them.
///
/// highest/lowest: ordered by metric (descending/ascending), ties by id
/// ascending. random: uniform sample without replacement drawn from the
/// id-sorted usable set, returned in id order, so the result depends only
/// on (seed, usable ids). Documents with a null metric are never selected by
/// davir; random draws from every scored document.
///
/// Throws std::invalid_argument for k < 1 and DegenerateInputError when no
/// document is usable.
std::vector<std::string> select(std::span<const ScoredDocument> scored,
                                const SelectionSpec& spec);

struct Overlap {
  std::size_t count = 0;
  double fraction = 0.0;  // count / |a|, 0 for empty a
};

Overlap selection_overlap(std::span<const std::string> a, std::span<const std::string> b);

/// Documents of `corpus` whose id is in `ids`, in the order of `ids`.
/// Throws ValidationError for an id missing from the corpus.
std::vector<Document> filter_corpus(std::span<const Document> corpus,
                                    std::span<const std::string> ids);

std::vector<std::string> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, std::span<const std::string> ids);

struct MixComponent {
  std::filesystem::path corpus;
  /// Source name used for tagging and renaming; defaults to the file stem.
  std::string name;
  /// Score file for `selection`; unused when selection is empty (ALL).
  std::filesystem::path scores;
  std::optional<SelectionSpec> selection;
};

struct MixSpec {
  std::vector<MixComponent> components;
  std::filesystem::path output;
};

struct MixStats {
  std::vector<std::size_t> per_component;
  std::size_t renamed = 0;
  std::size_t dropped_duplicates = 0;
  std::size_t total() const;
};

/// Reads a JSON mix file. Relative paths resolve against the
/// directory holding the mix file.
MixSpec read_mix_spec(const std::filesystem::path& path);

/// Concatenates each component's (selected) documents: components in file
/// order, ids ascending within a component, every document tagged
/// "source:<name>". A cross-component id collision throws ValidationError
/// unless `allow_collision`, in which case the later document is renamed
/// "<name>/<id>"; if the renamed id is still taken the first one wins.
std::vector<Document> mix(const MixSpec& spec, bool allow_collision, MixStats* stats = nullptr);

}  // namespace davir

#endif  // DAVIR_SELECTION_HPP
