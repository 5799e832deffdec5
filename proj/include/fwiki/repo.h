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

#ifndef FWIKI_REPO_H_
#define FWIKI_REPO_H_

// The repository service: a guarded central repository, an unchecked
// frontend, the clean/dirty sandbox pair and the gate that connects them.

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fwiki/backend.h"
#include "fwiki/config.h"
#include "fwiki/htmlgen.h"
#include "fwiki/request.h"
#include "fwiki/sandbox.h"
#include "fwiki/verifier.h"

namespace fwiki {

class LockBusy : public std::runtime_error {
 public:
  LockBusy() : std::runtime_error("another gate run holds the repository lock") {}
};

class SeedIncoherent : public std::runtime_error {
 public:
  explicit SeedIncoherent(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

class AuthFailure : public std::runtime_error {
 public:
  AuthFailure() : std::runtime_error("unknown admin token") {}
};

class NothingToRelease : public std::runtime_error {
 public:
  NothingToRelease() : std::runtime_error("stable already equals master") {}
};

/// Exclusive, non-blocking flock on `<central>/gate.lock`.
class RepoLock {
 public:
  explicit RepoLock(const fs::path& central);  // throws LockBusy
  ~RepoLock();
  RepoLock(const RepoLock&) = delete;
  RepoLock& operator=(const RepoLock&) = delete;

 private:
  int fd_ = -1;
};

struct CommitResult {
  bool accepted = false;
  std::string commit_id;  // empty unless a commit was made
  std::vector<Diagnostic> diagnostics;
  std::set<ArticleName> verified;
  std::set<ArticleName> cutoff;
  std::set<ArticleName> skipped;
  std::uint64_t verifications = 0;
  std::vector<std::pair<std::string, double>> timings;  // phase, seconds
  SyncStats sync;     // clean -> dirty
  SyncStats promote;  // dirty -> clean

  /// With |include_volatile| false, commit ids, timings and sync statistics
  /// are left out so results of different backends can be compared.
  std::string ToJson(bool include_volatile = true) const;
  std::string ToText() const;
};

struct InitOptions {
  RepoConfig config;
  fs::path seed_dir;          // empty for an empty library
  std::string token;          // generated when empty
  fs::path hook_executable;   // installed into git hooks when set
};

struct InitResult {
  std::string commit_id;
  std::string token;
  BuildReport report;
};

struct RepoStatus {
  LibraryVerdict verdict = LibraryVerdict::kCoherent;
  bool clean_valid = false;
  std::string master;
  std::string stable;
  size_t articles = 0;
  std::string last_report;  // JSON of the last gate run, if any

  std::string ToJson() const;
  std::string ToText() const;
};

class Repository {
 public:
  static InitResult Init(const InitOptions& options);
  static Repository Open(const fs::path& central);

  Repository(Repository&&) noexcept;
  Repository& operator=(Repository&&) noexcept;
  ~Repository();

  const RepoConfig& config() const { return config_; }
  VcsBackend& backend() { return *backend_; }
  const VcsBackend& backend() const { return *backend_; }
  Sandbox clean() const;
  Sandbox dirty() const;

  /// Push to the frontend followed by the gated promotion into central.
  CommitResult Submit(const CommitRequest& request);

  /// Checks the backend's staged changeset without committing.
  CommitResult HookPreCommit();

  /// Gates the frontend head into central master.
  CommitResult HookPostReceive();

  /// Brings the clean sandbox and publish_dir up to date with |commit_id|
  /// (master head when empty). Rendering failures are logged, not thrown.
  void HookPostCommit(const std::string& commit_id = {});

  std::string ReleaseStable(const std::string& token);

  RepoStatus Status() const;

  /// Build state kept by the clean sandbox.
  BuildState VerifyIncremental() const;

  /// Verifies |commit_id| (master head when empty) from scratch.
  BuildOutcome VerifyFull(const std::string& commit_id = {}) const;

  PublishResult Render(bool all);

  fs::path log_dir() const;

  /// Test hook: makes the next publish steps fail.
  static void SetPublishFault(bool on);

 private:
  enum class GateMode { kCommit, kCheckOnly, kHeal };

  explicit Repository(RepoConfig config);

  CommitResult RunGate(const CommitRequest& request, GateMode mode);
  CommitResult Pipeline(const CommitRequest& request, GateMode mode,
                        DirtySet* dirty_out);
  void Realign();
  void PublishDirty(const std::string& commit_id, const DirtySet& dirty);
  void LogGate(std::string_view mode, const CommitResult& result);
  void Notify(const std::string& line);
  std::string CleanHead() const;
  void SetCleanHead(const std::string& id) const;

  RepoConfig config_;
  std::unique_ptr<VcsBackend> backend_;
};

/// The request that turns |from| into |to|.
CommitRequest DiffRequest(const Snapshot& from, const Snapshot& to,
                          CommitMeta meta);

/// |base| with |request| applied.
Snapshot ApplyRequest(Snapshot base, const CommitRequest& request);

}  // namespace fwiki

#endif  // FWIKI_REPO_H_
