// Copyright 2026 The fwiki Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FWIKI_CONFIG_H_
#define FWIKI_CONFIG_H_

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "fwiki/backend.h"
#include "fwiki/util.h"

namespace fwiki {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RepoConfig {
  fs::path central;
  fs::path frontend;
  fs::path publish;
  int workers = 1;
  std::uint64_t max_files = 256;
  std::uint64_t max_bytes = 4u << 20;
  fs::path mirror;  // optional second publish target
  BackendKind backend = BackendKind::kPlainDir;
  std::set<std::string> admin_token_hashes;  // hex SHA-256 of each token

  /// Throws ConfigError when an invariant does not hold.
  void Validate() const;

  bool IsAdmin(const std::string& token) const;
};

/// `key = value` lines; `#` starts a comment. Unknown keys are an error.
RepoConfig ParseConfig(const std::string& text);
std::string FormatConfig(const RepoConfig& config);

fs::path ConfigPath(const fs::path& central);
fs::path AdminFilePath(const fs::path& central);

/// Reads fwiki.toml and the admin token file from an initialized repository.
RepoConfig LoadConfig(const fs::path& central);
void SaveConfig(const RepoConfig& config);

std::string HashToken(const std::string& token);
std::string GenerateToken();

}  // namespace fwiki

#endif  // FWIKI_CONFIG_H_
