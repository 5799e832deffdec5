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
#include "fwiki/depgraph.h"
#include "oracles.h"
#include "temp_dir.h"

using namespace fwiki;
using fwiki_test::TempDir;

namespace {

ArticleName N(const std::string& s) { return ArticleName(s); }

std::set<ArticleName> Names(std::initializer_list<const char*> names) {
  std::set<ArticleName> out;
  for (const char* n : names) out.insert(N(n));
  return out;
}

class CountingSink : public FileSink {
 public:
  void Write(const fs::path& p, std::string_view b) override {
    ++writes;
    FileSink::Write(p, b);
  }
  void Remove(const fs::path& p) override {
    ++removes;
    FileSink::Remove(p);
  }
  int writes = 0;
  int removes = 0;
};

DepManifest M(const char* name, std::vector<const char*> deps) {
  DepManifest m;
  m.article = N(name);
  for (const char* d : deps) m.deps.push_back(N(d));
  std::sort(m.deps.begin(), m.deps.end());
  return m;
}

DependencyGraph Diamond() {
  return BuildGraph({M("a", {}), M("b", {"a"}), M("c", {"a"}),
                     M("d", {"b", "c"})});
}

DependencyGraph ChainGraph(int n) {
  std::vector<DepManifest> ms;
  for (int i = 0; i < n; ++i) {
    DepManifest m;
    m.article = N("n" + std::to_string(i));
    if (i) m.deps.push_back(N("n" + std::to_string(i - 1)));
    ms.push_back(m);
  }
  return BuildGraph(ms);
}

fwiki_test::Edges EdgesOf(const DependencyGraph& g) {
  fwiki_test::Edges e;
  for (const auto& n : g.nodes()) {
    auto& s = e[n.str()];
    for (const auto& i : g.imports(n)) s.insert(i.str());
  }
  return e;
}

std::set<std::string> Strs(const std::set<ArticleName>& s) {
  std::set<std::string> out;
  for (const auto& n : s) out.insert(n.str());
  return out;
}

void ExhaustiveDirtyCheck(const DependencyGraph& g) {
  std::vector<ArticleName> nodes(g.nodes().begin(), g.nodes().end());
  REQUIRE(nodes.size() <= 8);
  auto edges = EdgesOf(g);
  for (unsigned mask = 0; mask < (1u << nodes.size()); ++mask) {
    std::set<ArticleName> changed;
    std::set<std::string> changed_s;
    for (size_t i = 0; i < nodes.size(); ++i)
      if (mask & (1u << i)) {
        changed.insert(nodes[i]);
        changed_s.insert(nodes[i].str());
      }
    DirtySet d = ComputeDirty(g, changed, {});
    CHECK(Strs(d.influenced) == fwiki_test::ReverseReachable(edges, changed_s));
    CHECK(d.changed == changed);
  }
}

}  // namespace

TEST_CASE("manifest serialization round trip") {
  DepManifest m = M("g", {"b", "a"});
  m.source_hash = Sha256("x");
  CHECK(DepManifest::Parse(m.Serialize()) == m);
}

TEST_CASE("extract_deps sorts and deduplicates") {
  TempDir dir;
  WriteFileAtomic(dir / "g.fml", "article g\nenviron imports b, a;\nbegin\n");
  WriteFileAtomic(dir / "e.fml", "article e\nenviron\nbegin\n");
  DepManifest g = ExtractDeps(dir / "g.fml");
  REQUIRE(g.deps.size() == 2);
  CHECK(g.deps[0].str() == "a");
  CHECK(g.deps[1].str() == "b");
  CHECK(g.source_hash == Sha256("article g\nenviron imports b, a;\nbegin\n"));
  CHECK(ExtractDeps(dir / "e.fml").deps.empty());
  WriteFileAtomic(dir / "h.fml", "article g\nenviron\nbegin\n");
  CHECK_THROWS_AS(ExtractDeps(dir / "h.fml"), ParseError);
}

TEST_CASE("manifests of a 200-article corpus match full parses") {
  std::mt19937_64 rng(5);
  fwiki_test::GenOptions opt;
  opt.articles = 200;
  auto lib = fwiki_test::RandomLibrary(rng, opt);
  TempDir dir;
  WriteSources(dir.path(), lib.Sources());
  RefreshResult r = RefreshManifests(dir.path(), dir / "deps");
  CHECK(r.errors.empty());
  CHECK(r.refreshed.size() == 200);
  auto manifests = LoadManifests(dir / "deps");
  REQUIRE(manifests.size() == 200);
  for (const auto& m : manifests) {
    std::string src = ReadFile(dir / m.article.file_name());
    Article a = ParseArticle(src, m.article);
    std::vector<ArticleName> expect = a.environ.imports;
    std::sort(expect.begin(), expect.end());
    CHECK(m.deps == expect);
    CHECK(m.source_hash == Sha256(src));
  }
}

TEST_CASE("refresh_manifests only touches changed articles") {
  std::mt19937_64 rng(9);
  fwiki_test::GenOptions opt;
  opt.articles = 30;
  auto lib = fwiki_test::RandomLibrary(rng, opt);
  TempDir dir;
  WriteSources(dir.path(), lib.Sources());
  RefreshManifests(dir.path(), dir / "deps");

  SUBCASE("no change is a fixpoint") {
    CountingSink sink;
    RefreshResult r = RefreshManifests(dir.path(), dir / "deps", sink);
    CHECK(r.refreshed.empty());
    CHECK(sink.writes == 0);
    CHECK(sink.removes == 0);
  }
  SUBCASE("justification-only edit refreshes that article only") {
    auto before = fwiki_test::ReadTree(dir / "deps");
    std::string src = ReadFile(dir / "a005.fml");
    WriteFileAtomic(dir / "a005.fml", src + "-- a comment changes the bytes\n");
    CountingSink sink;
    RefreshResult r = RefreshManifests(dir.path(), dir / "deps", sink);
    CHECK(r.refreshed == Names({"a005"}));
    CHECK(sink.writes == 1);
    auto after = fwiki_test::ReadTree(dir / "deps");
    for (const auto& [path, bytes] : before)
      if (path != "a005.d") CHECK(after.at(path) == bytes);
  }
  SUBCASE("deleting an article removes its manifest") {
    fs::remove(dir / "a007.fml");
    RefreshResult r = RefreshManifests(dir.path(), dir / "deps");
    CHECK(r.refreshed == Names({"a007"}));
    CHECK_FALSE(fs::exists(dir / "deps" / "a007.d"));
  }
  SUBCASE("header errors are reported and the stale manifest dropped") {
    WriteFileAtomic(dir / "a003.fml", "article a003\nenviron imports ;\nbegin\n");
    RefreshResult r = RefreshManifests(dir.path(), dir / "deps");
    CHECK(r.errors.count("a003.fml") == 1);
    CHECK_FALSE(fs::exists(dir / "deps" / "a003.d"));
  }
}

TEST_CASE("build_graph on a chain") {
  DependencyGraph g = BuildGraph({M("a", {}), M("b", {"a"}), M("c", {"b"})});
  CHECK(g.nodes().size() == 3);
  CHECK(g.edge_count() == 2);
  CHECK(g.dependents(N("a")) == Names({"b"}));
  CHECK(g.dependents(N("b")) == Names({"c"}));
  CHECK(g.dependents(N("c")).empty());
  CHECK(g.imports(N("c")) == Names({"b"}));
}

TEST_CASE("build_graph rejects cycles and dangling imports") {
  try {
    BuildGraph({M("a", {"b"}), M("b", {"a"})});
    FAIL("expected cycle");
  } catch (const GraphError& e) {
    CHECK(e.kind() == GraphError::Kind::kCycle);
    CHECK(e.cycle() == std::vector<ArticleName>{N("a"), N("b")});
  }
  try {
    BuildGraph({M("a", {"ghost"})});
    FAIL("expected dangling");
  } catch (const GraphError& e) {
    CHECK(e.kind() == GraphError::Kind::kDangling);
    REQUIRE(e.dangling().size() == 1);
    CHECK(e.dangling()[0].first == N("a"));
    CHECK(e.dangling()[0].second == N("ghost"));
  }
}

TEST_CASE("compute_dirty examples on the diamond") {
  DependencyGraph g = Diamond();
  CHECK(ComputeDirty(g, Names({"a"}), {}).influenced == Names({"a", "b", "c", "d"}));
  CHECK(ComputeDirty(g, Names({"d"}), {}).influenced == Names({"d"}));
  CHECK(ComputeDirty(g, {}, {}).influenced.empty());
  CHECK(ComputeDirty(g, {}, {}).empty());
}

TEST_CASE("compute_dirty equals brute-force reverse reachability") {
  ExhaustiveDirtyCheck(Diamond());
  ExhaustiveDirtyCheck(ChainGraph(8));
  std::mt19937_64 rng(1);
  for (int round = 0; round < 20; ++round) {
    std::vector<DepManifest> ms;
    for (int i = 0; i < 8; ++i) {
      DepManifest m;
      m.article = N("v" + std::to_string(i));
      for (int j = 0; j < i; ++j)
        if (rng() % 3 == 0) m.deps.push_back(N("v" + std::to_string(j)));
      ms.push_back(m);
    }
    ExhaustiveDirtyCheck(BuildGraph(ms));
  }
}

TEST_CASE("topo_order examples") {
  DependencyGraph d = Diamond();
  Layers all = TopoOrder(d, d.nodes());
  REQUIRE(all.size() == 3);
  CHECK(all[0] == Names({"a"}));
  CHECK(all[1] == Names({"b", "c"}));
  CHECK(all[2] == Names({"d"}));
  CHECK(TopoOrder(d, Names({"d"})) == Layers{Names({"d"})});
  DependencyGraph chain = BuildGraph({M("a", {}), M("b", {"a"}), M("c", {"b"})});
  CHECK(TopoOrder(chain, Names({"a", "c"})) ==
        Layers{Names({"a"}), Names({"c"})});
  CHECK(TopoOrder(chain, {}).empty());
}

TEST_CASE("topo_order layers respect every edge") {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 30; ++round) {
    std::vector<DepManifest> ms;
    for (int i = 0; i < 25; ++i) {
      DepManifest m;
      m.article = N("v" + std::to_string(i));
      for (int j = 0; j < i; ++j)
        if (rng() % 6 == 0) m.deps.push_back(N("v" + std::to_string(j)));
      std::sort(m.deps.begin(), m.deps.end());
      ms.push_back(m);
    }
    DependencyGraph g = BuildGraph(ms);
    std::set<ArticleName> subset;
    for (const auto& n : g.nodes())
      if (rng() % 2) subset.insert(n);
    Layers layers = TopoOrder(g, subset);
    std::map<ArticleName, size_t> layer_of;
    size_t total = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
      CHECK_FALSE(layers[i].empty());
      for (const auto& n : layers[i]) layer_of[n] = i;
      total += layers[i].size();
    }
    CHECK(total == subset.size());
    // Every import path between subset members must cross layers forward.
    for (const auto& u : subset) {
      std::set<ArticleName> seen;
      std::vector<ArticleName> stack(g.imports(u).begin(), g.imports(u).end());
      while (!stack.empty()) {
        ArticleName v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        if (subset.count(v)) CHECK(layer_of[v] < layer_of[u]);
        for (const auto& w : g.imports(v)) stack.push_back(w);
      }
    }
  }
}
