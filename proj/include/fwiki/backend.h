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

#ifndef FWIKI_BACKEND_H_
#define FWIKI_BACKEND_H_

// Version-control backends. The repository keeps only article sources
// under version control; everything generated lives in ignored paths.
//
// Both backends keep a working checkout of master's sources at the central
// root and a frontend clone that accepts unchecked pushes.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fwiki/util.h"

namespace fwiki {

/// Source file name -> bytes.
using Snapshot = std::map<std::string, std::string>;

/// The `*.fml` files directly under |dir|.
Snapshot ReadSources(const fs::path& dir);

/// Makes the `*.fml` files under |dir| equal to |snapshot|, touching only
/// files whose bytes differ.
void WriteSources(const fs::path& dir, const Snapshot& snapshot);

struct CommitMeta {
  std::string author;
  std::string message;
};

struct CommitInfo {
  std::string id;
  std::string parent;  // empty for the root commit
  CommitMeta meta;
};

enum class BackendKind { kPlainDir, kExternalDvcs };

std::string_view ToString(BackendKind kind);

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VcsBackend {
 public:
  virtual ~VcsBackend() = default;

  virtual BackendKind kind() const = 0;

  /// Creates storage with master = stable = one commit of |seed|, installs
  /// ignore rules and checks the sources out at the central root.
  virtual std::string Initialize(const Snapshot& seed,
                                 const CommitMeta& meta) = 0;

  virtual std::optional<std::string> Head(std::string_view branch) const = 0;
  virtual void SetBranch(std::string_view branch, const std::string& id) = 0;

  /// Appends one commit with tree |tree| to master and updates the checkout.
  virtual std::string CommitToMaster(const Snapshot& tree,
                                     const CommitMeta& meta) = 0;

  virtual Snapshot Tree(const std::string& id) const = 0;

  /// First-parent history of |branch|, oldest first.
  virtual std::vector<CommitInfo> Log(std::string_view branch) const = 0;

  virtual bool IsAncestor(const std::string& ancestor,
                          const std::string& descendant) const = 0;

  virtual void CreateTag(const std::string& name, const std::string& id) = 0;
  virtual std::vector<std::string> Tags() const = 0;

  /// Frontend clone of central master; pushes to it are not checked.
  virtual void CloneFrontend() = 0;
  virtual void PushFrontend(const Snapshot& tree, const CommitMeta& meta) = 0;
  virtual Snapshot FrontendTree() const = 0;
  virtual CommitMeta FrontendHeadMeta() const = 0;
  /// Frontend master := central master.
  virtual void ResetFrontend() = 0;

  /// The changeset a pre-commit hook sees as staged.
  virtual Snapshot Staged() const = 0;

  /// Installs hook scripts that exec |executable|; no-op when empty.
  virtual void InstallHooks(const fs::path& executable) = 0;
};

std::unique_ptr<VcsBackend> MakeBackend(BackendKind kind,
                                        const fs::path& central,
                                        const fs::path& frontend);

/// Detects the backend of an initialized central repository.
BackendKind DetectBackend(const fs::path& central);

bool GitAvailable();

}  // namespace fwiki

#endif  // FWIKI_BACKEND_H_
