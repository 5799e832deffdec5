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

#include "fwiki/sandbox.h"

#include <atomic>
#include <chrono>
#include <exception>
#include <sstream>
#include <utility>
#include <vector>

#include "fwiki/article.h"
#include "fwiki/verifier.h"

namespace fwiki {

namespace {

constexpr std::string_view kJournalDir = ".journal";

std::atomic<int> g_fault_after{-1};

void FaultPoint() {
  int remaining = g_fault_after.load();
  while (remaining >= 0) {
    if (remaining == 0) {
      g_fault_after.store(-1);
      throw InjectedFault("injected fault during promote");
    }
    if (g_fault_after.compare_exchange_weak(remaining, remaining - 1)) return;
  }
}

std::int64_t MtimeNs(const fs::path& p) {
  auto t = fs::last_write_time(p);
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             t.time_since_epoch())
      .count();
}

struct FileStat {
  std::uint64_t size = 0;
  std::int64_t mtime_ns = 0;
};

std::map<std::string, FileStat> Scan(const Sandbox& sb) {
  std::map<std::string, FileStat> out;
  std::error_code ec;
  if (!fs::exists(sb.root(), ec)) return out;
  fs::recursive_directory_iterator it(sb.root(), ec), end;
  if (ec) throw IoError("cannot scan " + sb.root().string());
  for (; it != end; it.increment(ec)) {
    if (ec) throw IoError("cannot scan " + sb.root().string());
    if (it->is_directory() && it->path().filename() == kJournalDir) {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::string rel = fs::relative(it->path(), sb.root()).generic_string();
    if (!IsTrackedPath(rel)) continue;
    out[rel] = {static_cast<std::uint64_t>(it->file_size()),
                MtimeNs(it->path())};
  }
  return out;
}

std::string RelativeTo(const Sandbox& sb, const fs::path& p) {
  fs::path rel = p.lexically_relative(sb.root());
  if (rel.empty() || *rel.begin() == "..") return {};
  return rel.generic_string();
}

// Both sides of a diff, with digests learned along the way.
struct DiffResult {
  SyncPlan plan;
  std::map<std::string, FileStat> source_files;
  std::map<std::string, Digest> source_digests;
  TreeIndex source_index;
  TreeIndex target_index;
  bool source_index_dirty = false;
};

DiffResult Diff(const Sandbox& source, const Sandbox& target,
                SyncStats* stats) {
  std::error_code ec;
  bool full = fs::exists(source.unaligned_marker(), ec) ||
              fs::exists(target.unaligned_marker(), ec);
  DiffResult r;
  if (!full) {
    r.source_index = TreeIndex::Load(source);
    r.target_index = TreeIndex::Load(target);
  }
  r.source_files = Scan(source);
  std::map<std::string, FileStat> target_files = Scan(target);
  if (stats) stats->files_scanned += r.source_files.size() + target_files.size();

  for (const auto& [path, st] : target_files)
    if (!r.source_files.count(path)) r.plan.remove.insert(path);

  struct Pending {
    const std::string* path;
    bool is_source;
    FileStat st;
    Digest digest;
    std::uint64_t bytes = 0;
    std::exception_ptr error;
  };
  std::vector<Pending> pending;
  std::map<std::string, Digest> target_digests;
  std::vector<const std::string*> same_size;
  for (const auto& [path, st] : r.source_files) {
    auto t = target_files.find(path);
    if (t == target_files.end() || t->second.size != st.size) {
      r.plan.copy.insert(path);
      continue;
    }
    same_size.push_back(&path);
    if (auto d = r.source_index.Lookup(path, st.size, st.mtime_ns))
      r.source_digests[path] = *d;
    else
      pending.push_back({&path, true, st, {}, 0, nullptr});
    if (auto d = r.target_index.Lookup(path, t->second.size, t->second.mtime_ns))
      target_digests[path] = *d;
    else
      pending.push_back({&path, false, t->second, {}, 0, nullptr});
  }

  const long n = static_cast<long>(pending.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    Pending& p = pending[i];
    const Sandbox& sb = p.is_source ? source : target;
    try {
      p.digest = HashFile(sb.root() / *p.path, &p.bytes);
    } catch (...) {
      p.error = std::current_exception();
    }
  }
  for (Pending& p : pending) {
    if (p.error) std::rethrow_exception(p.error);
    if (stats) {
      ++stats->files_hashed;
      stats->bytes_hashed += p.bytes;
    }
    TreeIndex::Entry e{p.st.size, p.st.mtime_ns, p.digest};
    if (p.is_source) {
      r.source_digests[*p.path] = p.digest;
      r.source_index.Put(*p.path, e);
      r.source_index_dirty = true;
    } else {
      target_digests[*p.path] = p.digest;
      r.target_index.Put(*p.path, e);
    }
  }
  for (const std::string* path : same_size) {
    if (r.source_digests.at(*path) != target_digests.at(*path))
      r.plan.copy.insert(*path);
  }
  return r;
}

void MarkUnaligned(const Sandbox& target) {
  try {
    WriteFileAtomic(target.unaligned_marker(), "unaligned\n");
  } catch (...) {
    // Nothing more can be done; the original error is what matters.
  }
}

void CopyOne(const Sandbox& source, const Sandbox& target,
             const std::string& path, DiffResult& r, SyncStats* stats) {
  std::string bytes = ReadFile(source.root() / path);
  fs::path dst = target.root() / path;
  WriteFileAtomic(dst, bytes);
  Digest d;
  if (auto it = r.source_digests.find(path); it != r.source_digests.end())
    d = it->second;
  else
    d = Sha256(bytes);
  r.target_index.Put(path, {bytes.size(), MtimeNs(dst), d});
  if (stats) {
    ++stats->files_written;
    stats->bytes_copied += bytes.size();
  }
}

}  // namespace

bool IsTrackedPath(const std::string& rel) {
  if (rel == "VALID" || rel == "UNALIGNED" || rel == "state/tree.idx")
    return false;
  if (rel.rfind(".journal/", 0) == 0) return false;
  constexpr std::string_view kTmp = ".fwiki-tmp";
  if (rel.size() >= kTmp.size() &&
      rel.compare(rel.size() - kTmp.size(), kTmp.size(), kTmp) == 0)
    return false;
  return true;
}

TreeIndex TreeIndex::Load(const Sandbox& sandbox) {
  TreeIndex idx;
  std::error_code ec;
  if (!fs::exists(sandbox.index_file(), ec)) return idx;
  std::string text;
  try {
    text = ReadFile(sandbox.index_file());
  } catch (const IoError&) {
    return idx;  // a cache; losing it only costs rehashing
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string hex, path;
    Entry e;
    if (!std::getline(fields, hex, '\t')) continue;
    if (!(fields >> e.size >> e.mtime_ns)) continue;
    fields.get();
    if (!std::getline(fields, path) || path.empty()) continue;
    auto d = Digest::FromHex(hex);
    if (!d) continue;
    e.digest = *d;
    idx.entries_[path] = e;
  }
  return idx;
}

void TreeIndex::Save(const Sandbox& sandbox) const {
  std::string out;
  for (const auto& [path, e] : entries_) {
    out += e.digest.hex() + "\t" + std::to_string(e.size) + " " +
           std::to_string(e.mtime_ns) + "\t" + path + "\n";
  }
  WriteFileAtomic(sandbox.index_file(), out);
}

std::optional<Digest> TreeIndex::Lookup(const std::string& path,
                                        std::uint64_t size,
                                        std::int64_t mtime_ns) const {
  auto it = entries_.find(path);
  if (it == entries_.end() || it->second.size != size ||
      it->second.mtime_ns != mtime_ns)
    return std::nullopt;
  return it->second.digest;
}

void TreeIndex::Put(const std::string& path, Entry entry) {
  entries_[path] = entry;
}

void TreeIndex::Erase(const std::string& path) { entries_.erase(path); }

IndexedSink::IndexedSink(const Sandbox& sandbox)
    : sandbox_(sandbox), index_(TreeIndex::Load(sandbox)) {}

void IndexedSink::Write(const fs::path& path, std::string_view bytes) {
  WriteFileAtomic(path, bytes);
  std::string rel = RelativeTo(sandbox_, path);
  if (!rel.empty() && IsTrackedPath(rel))
    index_.Put(rel, {bytes.size(), MtimeNs(path), Sha256(bytes)});
}

void IndexedSink::Remove(const fs::path& path) {
  FileSink::Remove(path);
  std::string rel = RelativeTo(sandbox_, path);
  if (!rel.empty()) index_.Erase(rel);
}

void IndexedSink::Commit() const { index_.Save(sandbox_); }

SyncPlan DiffTrees(const Sandbox& source, const Sandbox& target,
                   SyncStats* stats) {
  return Diff(source, target, stats).plan;
}

SyncPlan Sync(const Sandbox& source, const Sandbox& target, SyncStats* stats) {
  auto start = std::chrono::steady_clock::now();
  DiffResult r;
  try {
    std::error_code ec;
    fs::create_directories(target.root(), ec);
    r = Diff(source, target, stats);
    for (const auto& path : r.plan.remove) {
      FileSink().Remove(target.root() / path);
      r.target_index.Erase(path);
      if (stats) ++stats->files_deleted;
    }
    for (const auto& path : r.plan.copy) CopyOne(source, target, path, r, stats);
    r.target_index.Save(target);
    fs::remove(target.unaligned_marker(), ec);
    if (r.source_index_dirty) r.source_index.Save(source);
  } catch (...) {
    MarkUnaligned(target);
    throw;
  }
  if (stats) {
    stats->seconds += std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  }
  return r.plan;
}

bool IsSourcePath(const std::string& path) {
  if (path.find('/') != std::string::npos ||
      path.find('\\') != std::string::npos)
    return false;
  if (path.size() <= kSourceExtension.size() ||
      path.compare(path.size() - kSourceExtension.size(),
                   kSourceExtension.size(), kSourceExtension) != 0)
    return false;
  return ArticleName::IsValid(
      std::string_view(path).substr(0, path.size() - kSourceExtension.size()));
}

std::set<std::string> Overlay(const Sandbox& target,
                              const CommitRequest& changes, FileSink& sink) {
  for (const auto& c : changes.changes)
    if (!IsSourcePath(c.path)) throw IllegalPath(c.path);
  std::set<std::string> touched;
  for (const auto& c : changes.changes) {
    fs::path p = target.root() / c.path;
    if (c.action == ChangeAction::kDelete) {
      std::error_code ec;
      if (fs::exists(p, ec)) sink.Remove(p);
    } else {
      sink.Write(p, c.payload);
    }
    touched.insert(c.path);
  }
  return touched;
}

namespace {

void WritePhase(const Sandbox& clean, std::string_view phase) {
  FaultPoint();
  WriteFileAtomic(clean.journal_dir() / "PHASE", std::string(phase) + "\n");
}

void RestoreBackups(const Sandbox& clean) {
  fs::path backup = clean.journal_dir() / "backup";
  for (const auto& rel : ListFilesRecursive(backup)) {
    fs::path dst = clean.root() / rel;
    std::error_code ec;
    fs::create_directories(dst.parent_path(), ec);
    fs::rename(backup / rel, dst, ec);
    if (ec) throw IoError("cannot restore " + dst.string());
  }
}

}  // namespace

SyncPlan Promote(const Sandbox& dirty, const Sandbox& clean, SyncStats* stats) {
  BuildState state;
  try {
    state = LoadBuildState(dirty);
  } catch (const std::runtime_error& e) {
    throw PromoteIncoherent(std::string("unreadable build state: ") + e.what());
  }
  std::error_code ec;
  if (!fs::exists(dirty.state_file(), ec) ||
      state.verdict != LibraryVerdict::kCoherent)
    throw PromoteIncoherent("dirty sandbox is not coherent");
  for (const auto& [name, rec] : state.records) {
    if (rec.verdict != Verdict::kVerified)
      throw PromoteIncoherent("record for '" + name.str() + "' is not verified");
  }

  auto start = std::chrono::steady_clock::now();
  RecoverSandbox(clean);
  DiffResult r = Diff(dirty, clean, stats);
  if (r.plan.empty()) {
    if (!fs::exists(clean.valid_marker(), ec))
      WriteFileAtomic(clean.valid_marker(), "valid\n");
    return r.plan;
  }

  fs::path journal = clean.journal_dir();
  fs::path backup = journal / "backup";
  fs::remove_all(journal, ec);
  fs::create_directories(backup, ec);
  if (ec) throw IoError("cannot create journal in " + clean.root().string());
  WritePhase(clean, "prepare");

  std::string created;
  auto stash = [&](const std::string& path) {
    fs::path src = clean.root() / path;
    if (!fs::exists(src, ec)) return false;
    FaultPoint();
    fs::path dst = backup / path;
    fs::create_directories(dst.parent_path(), ec);
    fs::rename(src, dst, ec);
    if (ec) throw IoError("cannot stash " + src.string());
    r.target_index.Erase(path);
    return true;
  };
  for (const auto& path : r.plan.remove) stash(path);
  for (const auto& path : r.plan.copy) {
    if (!stash(path)) created += path + "\n";
  }
  FaultPoint();
  WriteFileAtomic(journal / "created", created);
  WritePhase(clean, "apply");

  FaultPoint();
  fs::remove(clean.valid_marker(), ec);
  if (stats) stats->files_deleted += r.plan.remove.size();
  for (const auto& path : r.plan.copy) {
    FaultPoint();
    CopyOne(dirty, clean, path, r, stats);
  }
  r.target_index.Save(clean);
  FaultPoint();
  WriteFileAtomic(clean.valid_marker(), "valid\n");
  WritePhase(clean, "done");
  FaultPoint();
  fs::remove_all(journal, ec);
  fs::remove(clean.unaligned_marker(), ec);
  if (r.source_index_dirty) r.source_index.Save(dirty);
  if (stats) {
    stats->seconds += std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  }
  return r.plan;
}

bool RecoverSandbox(const Sandbox& clean) {
  std::error_code ec;
  fs::path journal = clean.journal_dir();
  if (!fs::exists(journal, ec)) return false;
  std::string phase = "prepare";
  if (fs::exists(journal / "PHASE", ec)) phase = Trim(ReadFile(journal / "PHASE"));

  if (phase == "apply") {
    std::string created;
    if (fs::exists(journal / "created", ec)) created = ReadFile(journal / "created");
    std::istringstream in(created);
    std::string path;
    while (std::getline(in, path)) {
      if (!path.empty()) fs::remove(clean.root() / path, ec);
    }
  }
  if (phase != "done") {
    RestoreBackups(clean);
    WriteFileAtomic(clean.valid_marker(), "valid\n");
  }
  fs::remove_all(journal, ec);
  if (ec) throw IoError("cannot remove journal in " + clean.root().string());
  return true;
}

Digest TreeHash(const Sandbox& sandbox) {
  Sha256Stream s;
  for (const auto& [path, st] : Scan(sandbox)) {
    s.Update(path);
    s.Update(std::string_view("\0", 1));
    s.Update(HashFile(sandbox.root() / path).hex());
    s.Update("\n");
  }
  return s.Finish();
}

void SetPromoteFaultAfter(int ops) { g_fault_after.store(ops < 0 ? -1 : ops); }

}  // namespace fwiki
