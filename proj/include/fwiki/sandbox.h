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

#ifndef FWIKI_SANDBOX_H_
#define FWIKI_SANDBOX_H_

// Clean and dirty working directories and the hash-indexed tree sync that
// moves builds between them.
//
// Layout relative to a sandbox root:
//   *.fml              sources
//   deps/*.d           dependency manifests
//   state/build.json   build state
//   state/tree.idx     hash index cache (path, size, mtime, digest)
//   html/**            rendered pages
//   VALID              promotion marker
//
// VALID, UNALIGNED, state/tree.idx and .journal/ are bookkeeping of one
// particular directory and never take part in diffs or tree hashes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "fwiki/hash.h"
#include "fwiki/request.h"
#include "fwiki/util.h"

namespace fwiki {

enum class SandboxRole { kClean, kDirty };

class Sandbox {
 public:
  Sandbox(fs::path root, SandboxRole role)
      : root_(std::move(root)), role_(role) {}

  const fs::path& root() const { return root_; }
  SandboxRole role() const { return role_; }

  fs::path deps_dir() const { return root_ / "deps"; }
  fs::path state_dir() const { return root_ / "state"; }
  fs::path state_file() const { return root_ / "state" / "build.json"; }
  fs::path index_file() const { return root_ / "state" / "tree.idx"; }
  fs::path html_dir() const { return root_ / "html"; }
  fs::path valid_marker() const { return root_ / "VALID"; }
  fs::path unaligned_marker() const { return root_ / "UNALIGNED"; }
  fs::path journal_dir() const { return root_ / ".journal"; }

 private:
  fs::path root_;
  SandboxRole role_;
};

/// True for paths that belong to the synchronized tree.
bool IsTrackedPath(const std::string& relative);

/// Persistent cache of file digests keyed by (size, mtime). mtime is a
/// cache key only: a mismatch means "rehash", never "changed".
class TreeIndex {
 public:
  struct Entry {
    std::uint64_t size = 0;
    std::int64_t mtime_ns = 0;
    Digest digest;
  };

  static TreeIndex Load(const Sandbox& sandbox);
  void Save(const Sandbox& sandbox) const;

  /// Cached digest if |size| and |mtime_ns| still match.
  std::optional<Digest> Lookup(const std::string& path, std::uint64_t size,
                               std::int64_t mtime_ns) const;
  void Put(const std::string& path, Entry entry);
  void Erase(const std::string& path);
  void Clear() { entries_.clear(); }
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry> entries_;
};

/// FileSink that records every file it writes into a sandbox's hash index,
/// hashing the bytes already in memory. Call Commit() to persist the index.
class IndexedSink : public FileSink {
 public:
  explicit IndexedSink(const Sandbox& sandbox);
  void Write(const fs::path& path, std::string_view bytes) override;
  void Remove(const fs::path& path) override;
  void Commit() const;

 private:
  const Sandbox& sandbox_;
  TreeIndex index_;
};

struct SyncPlan {
  std::set<std::string> copy;
  std::set<std::string> remove;

  bool empty() const { return copy.empty() && remove.empty(); }
  bool operator==(const SyncPlan&) const = default;
};

/// Work counters for one diff or sync.
struct SyncStats {
  std::uint64_t files_scanned = 0;
  std::uint64_t files_hashed = 0;
  std::uint64_t bytes_hashed = 0;  // bodies read to decide equality
  std::uint64_t files_written = 0;
  std::uint64_t files_deleted = 0;
  std::uint64_t bytes_copied = 0;
  double seconds = 0;
};

/// Content diff by digest with a size-first short-circuit: bodies of files
/// whose sizes differ are never read.
SyncPlan DiffTrees(const Sandbox& source, const Sandbox& target,
                   SyncStats* stats = nullptr);

/// Makes |target| content-identical to |source|. An IO failure leaves
/// |target| marked UNALIGNED, which forces the next sync to ignore both
/// hash indexes.
SyncPlan Sync(const Sandbox& source, const Sandbox& target,
              SyncStats* stats = nullptr);

class IllegalPath : public std::runtime_error {
 public:
  explicit IllegalPath(const std::string& path)
      : std::runtime_error("illegal path '" + path + "'"), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// True for `<article>.fml` directly at the library root.
bool IsSourcePath(const std::string& path);

/// Applies a request's source changes to |target|. Every path is checked
/// before anything is written. Returns the paths written or deleted.
std::set<std::string> Overlay(const Sandbox& target,
                              const CommitRequest& changes,
                              FileSink& sink = DefaultSink());

class PromoteIncoherent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Makes |clean| content-identical to |dirty| under a rollback journal.
/// Refuses unless dirty's build state is Coherent.
SyncPlan Promote(const Sandbox& dirty, const Sandbox& clean,
                 SyncStats* stats = nullptr);

/// Completes or rolls back an interrupted promotion. Returns true if a
/// journal was found.
bool RecoverSandbox(const Sandbox& clean);

/// Digest over every tracked (path, content digest) pair. Reads every file.
Digest TreeHash(const Sandbox& sandbox);

/// Test hook: throw after |ops| more promotion file operations (negative
/// disables). Simulates a crash at that point.
void SetPromoteFaultAfter(int ops);

class InjectedFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fwiki

#endif  // FWIKI_SANDBOX_H_
