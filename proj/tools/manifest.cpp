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

#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <unistd.h>

#include "davir/davir.h"

namespace davir::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0xf]);
  }
  return hex;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> argv)
    : subcommand_(std::move(subcommand)), argv_(std::move(argv)), started_at_(utc_timestamp()) {}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back(path);
  input_digests_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::set_param(const std::string& key, nlohmann::json value) {
  params_[key] = std::move(value);
}

void RunManifest::set_seed(const std::string& key, std::uint64_t seed) { seeds_[key] = seed; }

void RunManifest::set_workers(std::size_t workers) { workers_ = workers; }

std::filesystem::path RunManifest::path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void RunManifest::finish() {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& p : outputs_) outputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  const nlohmann::json doc = {
      {"tool", "davir"},
      {"version", davir_version()},
      {"subcommand", subcommand_},
      {"argv", argv_},
      {"inputs", input_digests_},
      {"outputs", outputs},
      {"params", params_},
      {"seeds", seeds_},
      {"workers", workers_},
      {"started_at", started_at_},
      {"finished_at", utc_timestamp()},
  };
  const std::string text = doc.dump(2) + "\n";
  for (const auto& p : outputs_) {
    const auto target = path_for(p);
    const auto tmp = std::filesystem::path(target.string() + ".tmp." + std::to_string(::getpid()));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << text;
      if (!out.flush()) throw IoFailure("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  }
}

}  // namespace davir::cli
