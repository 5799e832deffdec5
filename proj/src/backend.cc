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

#include "fwiki/backend.h"

#include <cstdlib>

#include "fwiki/sandbox.h"

namespace fwiki {

Snapshot ReadSources(const fs::path& dir) {
  Snapshot out;
  std::error_code ec;
  if (!fs::exists(dir, ec)) return out;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end;
       it.increment(ec)) {
    std::string name = it->path().filename().string();
    if (it->is_regular_file() && IsSourcePath(name))
      out[name] = ReadFile(it->path());
  }
  if (ec) throw IoError("cannot list " + dir.string());
  return out;
}

void WriteSources(const fs::path& dir, const Snapshot& snapshot) {
  Snapshot current = ReadSources(dir);
  for (const auto& [name, bytes] : current) {
    if (!snapshot.count(name)) {
      std::error_code ec;
      fs::remove(dir / name, ec);
      if (ec) throw IoError("cannot remove " + (dir / name).string());
    }
  }
  for (const auto& [name, bytes] : snapshot) {
    auto it = current.find(name);
    if (it == current.end() || it->second != bytes)
      WriteFileAtomic(dir / name, bytes);
  }
}

std::string_view ToString(BackendKind kind) {
  return kind == BackendKind::kPlainDir ? "plain" : "git";
}

BackendKind DetectBackend(const fs::path& central) {
  std::error_code ec;
  if (fs::exists(central / ".git", ec)) return BackendKind::kExternalDvcs;
  return BackendKind::kPlainDir;
}

std::unique_ptr<VcsBackend> MakePlainBackend(const fs::path& central,
                                             const fs::path& frontend);
std::unique_ptr<VcsBackend> MakeGitBackend(const fs::path& central,
                                           const fs::path& frontend);

std::unique_ptr<VcsBackend> MakeBackend(BackendKind kind,
                                        const fs::path& central,
                                        const fs::path& frontend) {
  if (kind == BackendKind::kPlainDir) return MakePlainBackend(central, frontend);
  return MakeGitBackend(central, frontend);
}

}  // namespace fwiki
