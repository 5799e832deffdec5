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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "corpus.h"
#include "fwiki/sandbox.h"
#include "oracles.h"
#include "pipeline.h"
#include "temp_dir.h"

using namespace fwiki;
using fwiki_test::TempDir;

namespace {

struct Pair {
  TempDir base;
  Sandbox clean{base.path() / "clean", SandboxRole::kClean};
  Sandbox dirty{base.path() / "dirty", SandboxRole::kDirty};
  Pair() {
    fs::create_directories(clean.root());
    fs::create_directories(dirty.root());
  }
};

void Put(const Sandbox& sb, const std::string& rel, const std::string& bytes) {
  WriteFileAtomic(sb.root() / rel, bytes);
}

std::uint64_t TrackedBytes(const Sandbox& sb) {
  std::uint64_t total = 0;
  for (const auto& rel : ListFilesRecursive(sb.root()))
    if (IsTrackedPath(rel)) total += fs::file_size(sb.root() / rel);
  return total;
}

CommitRequest Req(std::vector<Change> changes) {
  CommitRequest r;
  r.author = "t";
  r.message = "m";
  r.changes = std::move(changes);
  return r;
}

}  // namespace

TEST_CASE("tracked paths exclude per-directory bookkeeping") {
  CHECK(IsTrackedPath("a.fml"));
  CHECK(IsTrackedPath("deps/a.d"));
  CHECK(IsTrackedPath("html/a.html"));
  CHECK(IsTrackedPath("state/build.json"));
  CHECK_FALSE(IsTrackedPath("VALID"));
  CHECK_FALSE(IsTrackedPath("UNALIGNED"));
  CHECK_FALSE(IsTrackedPath("state/tree.idx"));
  CHECK_FALSE(IsTrackedPath(".journal/PHASE"));
}

TEST_CASE("diff by content") {
  Pair p;
  Put(p.dirty, "a.fml", "aaaa");
  Put(p.dirty, "b.fml", "bbbb");
  Put(p.clean, "a.fml", "aaaa");
  Put(p.clean, "b.fml", "bbbc");  // same size, different bytes
  Put(p.clean, "c.fml", "cc");
  Put(p.clean, "VALID", "");
  SyncPlan plan = DiffTrees(p.dirty, p.clean);
  CHECK(plan.copy == std::set<std::string>{"b.fml"});
  CHECK(plan.remove == std::set<std::string>{"c.fml"});
}

TEST_CASE("size mismatch never reads bodies") {
  Pair p;
  Put(p.dirty, "a.fml", std::string(1000, 'x'));
  Put(p.clean, "a.fml", std::string(999, 'x'));
  SyncStats stats;
  SyncPlan plan = DiffTrees(p.dirty, p.clean, &stats);
  CHECK(plan.copy == std::set<std::string>{"a.fml"});
  CHECK(stats.bytes_hashed == 0);
}

TEST_CASE("sync makes trees identical and is idempotent") {
  Pair p;
  std::mt19937_64 rng(3);
  auto lib = fwiki_test::RandomLibrary(rng, {});
  fwiki_test::StageSources(p.dirty, lib.Sources());
  Put(p.clean, "stale.fml", "junk");

  SyncStats first;
  SyncPlan plan = Sync(p.dirty, p.clean, &first);
  CHECK(plan.remove == std::set<std::string>{"stale.fml"});
  CHECK(TreeHash(p.dirty) == TreeHash(p.clean));
  CHECK(fwiki_test::ReadTree(p.dirty.root() / "html") ==
        fwiki_test::ReadTree(p.clean.root() / "html"));

  SyncStats second;
  CHECK(Sync(p.dirty, p.clean, &second).empty());
  CHECK(second.files_written == 0);
  CHECK(second.files_deleted == 0);
}

TEST_CASE("sync after a leaf edit reads a small fraction of the tree") {
  Pair p;
  std::mt19937_64 rng(5);
  fwiki_test::GenOptions opt;
  opt.articles = 300;
  opt.layer_width = 30;
  auto lib = fwiki_test::RandomLibrary(rng, opt);
  fwiki_test::StageSources(p.dirty, lib.Sources());
  Sync(p.dirty, p.clean);
  Sync(p.dirty, p.clean);  // warm both indexes

  std::string leaf;
  for (const auto& [n, a] : lib.articles)
    if (lib.Dependents(n).empty()) leaf = n;
  auto src = lib.Sources();
  src[leaf + ".fml"] += "thm extra : 1 < 2 by evaluation;\n";
  auto staged = fwiki_test::StageSources(p.dirty, src);
  REQUIRE(staged.adm.admissible);

  SyncStats stats;
  SyncPlan plan = Sync(p.dirty, p.clean, &stats);
  std::uint64_t total = TrackedBytes(p.dirty);
  MESSAGE("hashed " << stats.bytes_hashed << " of " << total << " bytes");
  CHECK(stats.bytes_hashed * 100 < total);
  CHECK(plan.copy.count(leaf + ".fml") == 1);
  CHECK(plan.copy.size() <= 5);
  CHECK(TreeHash(p.dirty) == TreeHash(p.clean));
}

TEST_CASE("UNALIGNED makes the next diff distrust cached digests") {
  Pair p;
  Put(p.dirty, "a.fml", "version-one");
  Sync(p.dirty, p.clean);
  Sync(p.dirty, p.clean);

  // Rewrite with equal size and the old mtime so the cache cannot notice.
  fs::path f = p.clean.root() / "a.fml";
  auto mtime = fs::last_write_time(f);
  WriteFileAtomic(f, "version-two");
  fs::last_write_time(f, mtime);
  CHECK(DiffTrees(p.dirty, p.clean).empty());

  Put(p.clean, "UNALIGNED", "");
  CHECK(DiffTrees(p.dirty, p.clean).copy == std::set<std::string>{"a.fml"});
  Sync(p.dirty, p.clean);
  CHECK_FALSE(fs::exists(p.clean.unaligned_marker()));
  CHECK(ReadFile(f) == "version-one");
}

TEST_CASE("a failing sync marks the target UNALIGNED") {
  Pair p;
  Put(p.dirty, "a.fml", "aaa");
  Put(p.dirty, "b.fml", "bbb");
  fs::create_directories(p.clean.root() / "b.fml" / "blocker");
  CHECK_THROWS(Sync(p.dirty, p.clean));
  CHECK(fs::exists(p.clean.unaligned_marker()));
  fs::remove_all(p.clean.root() / "b.fml");
  Sync(p.dirty, p.clean);
  CHECK_FALSE(fs::exists(p.clean.unaligned_marker()));
  CHECK(TreeHash(p.dirty) == TreeHash(p.clean));
}

TEST_CASE("overlay checks every path before writing") {
  Pair p;
  Put(p.dirty, "a.fml", "old");
  for (const char* bad : {"../x.fml", "sub/x.fml", "x.txt", "deps/a.d",
                          "/abs.fml", ".fml", "VALID", "a b.fml"}) {
    CAPTURE(bad);
    CommitRequest r = Req({{"a.fml", ChangeAction::kModify, "new"},
                           {bad, ChangeAction::kAdd, "x"}});
    CHECK_THROWS_AS(Overlay(p.dirty, r), IllegalPath);
    CHECK(ReadFile(p.dirty.root() / "a.fml") == "old");
  }
  auto written = Overlay(p.dirty, Req({{"a.fml", ChangeAction::kDelete, ""},
                                       {"b.fml", ChangeAction::kAdd, "b"}}));
  CHECK(written == std::set<std::string>{"a.fml", "b.fml"});
  CHECK_FALSE(fs::exists(p.dirty.root() / "a.fml"));
  CHECK(ReadFile(p.dirty.root() / "b.fml") == "b");
}

TEST_CASE("promote refuses an incoherent dirty sandbox") {
  Pair p;
  auto lib = fwiki_test::DiamondLibrary();
  fwiki_test::StageSources(p.dirty, lib.Sources());
  Promote(p.dirty, p.clean);
  Digest before = TreeHash(p.clean);

  BuildState state = LoadBuildState(p.dirty);
  state.verdict = LibraryVerdict::kIncoherent;
  SaveBuildState(state, p.dirty);
  Put(p.dirty, "a.fml", "changed");
  CHECK_THROWS_AS(Promote(p.dirty, p.clean), PromoteIncoherent);
  CHECK(TreeHash(p.clean) == before);
}

TEST_CASE("an interrupted promote recovers to the old or new tree") {
  auto lib = fwiki_test::DiamondLibrary();
  auto next = lib;
  next.articles["a"].items[1].thm->refs = {};
  next.articles["a"].items[1].thm->rel = "<";
  next.articles["a"].items[1].thm->rhs = 100;
  std::mt19937_64 rng(1);
  next = fwiki_test::MakeMutation(rng, next,
                                  fwiki_test::MutationKind::kAddArticle)
             .after;

  int crashes = 0;
  for (int ops = 0;; ++ops) {
    CAPTURE(ops);
    Pair p;
    fwiki_test::StageSources(p.dirty, lib.Sources());
    Promote(p.dirty, p.clean);
    Digest old_hash = TreeHash(p.clean);
    REQUIRE(fwiki_test::StageSources(p.dirty, next.Sources()).adm.admissible);
    Digest new_hash = TreeHash(p.dirty);
    REQUIRE(old_hash != new_hash);

    SetPromoteFaultAfter(ops);
    bool crashed = false;
    try {
      Promote(p.dirty, p.clean);
    } catch (const InjectedFault&) {
      crashed = true;
    }
    SetPromoteFaultAfter(-1);
    if (crashed) {
      ++crashes;
      CHECK(RecoverSandbox(p.clean));
      Digest h = TreeHash(p.clean);
      CHECK((h == old_hash || h == new_hash));
      CHECK(fs::exists(p.clean.valid_marker()));
      CHECK_FALSE(fs::exists(p.clean.journal_dir()));
    } else {
      CHECK(TreeHash(p.clean) == new_hash);
      CHECK_FALSE(RecoverSandbox(p.clean));
      break;
    }
  }
  CHECK(crashes > 3);
}
