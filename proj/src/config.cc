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

#include "fwiki/config.h"

#include <charconv>
#include <random>
#include <sstream>

#include "fwiki/hash.h"

namespace fwiki {
namespace {

std::uint64_t ParseCount(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  return v;
}

}  // namespace

void RepoConfig::Validate() const {
  if (central.empty()) throw ConfigError("central path missing");
  if (frontend.empty()) throw ConfigError("frontend path missing");
  if (publish.empty()) throw ConfigError("publish path missing");
  if (fs::weakly_canonical(fs::absolute(central)) ==
      fs::weakly_canonical(fs::absolute(frontend)))
    throw ConfigError("central and frontend must differ");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (max_files < 1) throw ConfigError("max_files must be at least 1");
}

bool RepoConfig::IsAdmin(const std::string& token) const {
  return !token.empty() && admin_token_hashes.count(HashToken(token)) != 0;
}

RepoConfig ParseConfig(const std::string& text) {
  RepoConfig c;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    std::string t = Trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = Trim(t.substr(0, eq));
    std::string value = Trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key == "central") {
      c.central = value;
    } else if (key == "frontend") {
      c.frontend = value;
    } else if (key == "publish") {
      c.publish = value;
    } else if (key == "workers") {
      c.workers = static_cast<int>(ParseCount(key, value));
    } else if (key == "max_files") {
      c.max_files = ParseCount(key, value);
    } else if (key == "max_bytes") {
      c.max_bytes = ParseCount(key, value);
    } else if (key == "mirror") {
      c.mirror = value;
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return c;
}

std::string FormatConfig(const RepoConfig& c) {
  std::ostringstream out;
  out << "central = " << c.central.string() << "\n"
      << "frontend = " << c.frontend.string() << "\n"
      << "publish = " << c.publish.string() << "\n"
      << "workers = " << c.workers << "\n"
      << "max_files = " << c.max_files << "\n"
      << "max_bytes = " << c.max_bytes << "\n";
  if (!c.mirror.empty()) out << "mirror = " << c.mirror.string() << "\n";
  return out.str();
}

fs::path ConfigPath(const fs::path& central) { return central / "fwiki.toml"; }
fs::path AdminFilePath(const fs::path& central) {
  return central / ".fwiki-admin";
}

RepoConfig LoadConfig(const fs::path& central) {
  std::error_code ec;
  if (!fs::exists(ConfigPath(central), ec))
    throw ConfigError("not a repository: " + central.string());
  RepoConfig c = ParseConfig(ReadFile(ConfigPath(central)));
  // The file records paths as given at init; the directory we were handed
  // is authoritative for the central location.
  c.central = central;
  c.backend = DetectBackend(central);
  if (fs::exists(AdminFilePath(central), ec)) {
    std::istringstream in(ReadFile(AdminFilePath(central)));
    for (std::string line; std::getline(in, line);)
      if (!Trim(line).empty()) c.admin_token_hashes.insert(Trim(line));
  }
  c.Validate();
  return c;
}

void SaveConfig(const RepoConfig& c) {
  WriteFileAtomic(ConfigPath(c.central), FormatConfig(c));
  std::string admins;
  for (const auto& h : c.admin_token_hashes) admins += h + "\n";
  WriteFileAtomic(AdminFilePath(c.central), admins);
  fs::permissions(AdminFilePath(c.central),
                  fs::perms::owner_read | fs::perms::owner_write);
}

std::string HashToken(const std::string& token) { return Sha256(token).hex(); }

std::string GenerateToken() {
  std::random_device rd;
  std::string seed;
  for (int i = 0; i < 8; ++i) seed += std::to_string(rd());
  return Sha256(seed).hex().substr(0, 32);
}

}  // namespace fwiki
