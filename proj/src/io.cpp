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

#include "davir/io.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <system_error>

#include "davir/error.hpp"
#include "json.hpp"

namespace davir::io {

namespace fs = std::filesystem;

LineReader::LineReader(const fs::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open " + path.string() + " for reading");
}

std::optional<std::string_view> LineReader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_number_;
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.find_first_not_of(" \t") == std::string::npos) continue;
    return std::string_view(buffer_);
  }
  if (in_.bad()) throw IoError("read error in " + path_.string());
  return std::nullopt;
}

AtomicFileWriter::AtomicFileWriter(fs::path path) : path_(std::move(path)) {
  temp_path_ = path_;
  temp_path_ += ".tmp." + std::to_string(::getpid());
  out_.open(temp_path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + temp_path_.string() + " for writing");
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    fs::remove(temp_path_, ec);
  }
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw IoError("write error on " + temp_path_.string());
  out_.close();
  std::error_code ec;
  fs::rename(temp_path_, path_, ec);
  if (ec) {
    fs::remove(temp_path_, ec);
    throw IoError("cannot rename into " + path_.string() + ": " + ec.message());
  }
  committed_ = true;
}

std::string format_double(double value) {
  if (!std::isfinite(value))
    throw std::invalid_argument("non-finite number cannot be serialized");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void append_number_array(std::string& out, std::span<const double> values) {
  out.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(values[i]);
  }
  out.push_back(']');
}

std::string quote_json(std::string_view text) {
  return nlohmann::json(std::string(text)).dump();
}

}  // namespace davir::io
