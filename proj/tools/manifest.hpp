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

// Run manifests: every output file gets a sibling `<output>.manifest.json`
// recording how it was produced.

#ifndef DAVIR_TOOLS_MANIFEST_HPP
#define DAVIR_TOOLS_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace davir::cli {

/// File-system failure raised by the CLI itself (exit code 4).
struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// UTC, second resolution, ISO 8601.
std::string utc_timestamp();

class RunManifest {
 public:
  RunManifest(std::string subcommand, std::vector<std::string> argv);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_param(const std::string& key, nlohmann::json value);
  void set_seed(const std::string& key, std::uint64_t seed);
  void set_workers(std::size_t workers);

  const std::vector<std::filesystem::path>& inputs() const { return inputs_; }
  const std::vector<std::filesystem::path>& outputs() const { return outputs_; }

  /// Hashes outputs and writes one manifest next to each of them.
  void finish();

  static std::filesystem::path path_for(const std::filesystem::path& output);

 private:
  std::string subcommand_;
  std::vector<std::string> argv_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  nlohmann::json input_digests_ = nlohmann::json::array();
  nlohmann::json params_ = nlohmann::json::object();
  nlohmann::json seeds_ = nlohmann::json::object();
  std::size_t workers_ = 1;
  std::string started_at_;
};

}  // namespace davir::cli

#endif  // DAVIR_TOOLS_MANIFEST_HPP
