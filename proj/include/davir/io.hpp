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

// Low-level file plumbing shared by every reader and writer: line-oriented
// input with line numbers, all-or-nothing output, and the canonical textual
// form of floating point numbers.

#ifndef DAVIR_IO_HPP
#define DAVIR_IO_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace davir::io {

/// Reads a text file one line at a time. Blank lines are skipped but still
/// counted, so line_number() always matches what an editor shows.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  /// Next non-blank line, or nullopt at end of file.
  std::optional<std::string_view> next();
  std::size_t line_number() const { return line_number_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string buffer_;
  std::size_t line_number_ = 0;
};

/// Writes to a temporary sibling of `path` and renames it into place on
/// commit(). An uncommitted writer removes its temporary file, so readers
/// never observe a partially written output.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path path);
  ~AtomicFileWriter();

  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path temp_path_;
  std::ofstream out_;
  bool committed_ = false;
};

/// 17 significant digits; enough to round-trip any double exactly.
/// Throws std::invalid_argument on NaN or infinity (not representable in
/// JSON).
std::string format_double(double value);

/// Appends `[v0,v1,...]` using format_double for each element.
void append_number_array(std::string& out, std::span<const double> values);

/// JSON string literal with escaping, for hand-assembled JSONL records.
std::string quote_json(std::string_view text);

}  // namespace davir::io

#endif  // DAVIR_IO_HPP
