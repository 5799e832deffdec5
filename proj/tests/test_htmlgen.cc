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
#include "fwiki/htmlgen.h"
#include "oracles.h"
#include "pipeline.h"
#include "temp_dir.h"

using namespace fwiki;
using fwiki_test::TempDir;
using Outlinks = std::set<std::pair<std::string, std::string>>;

namespace {

const char* kG =
    "article g\nenviron\nbegin\ndef d1 : tau1000 := 1618;\n"
    "thm t : tau1000 < 1619 by evaluation;\n";

// Build state for a handful of sources, verified in memory.
BuildState StateOf(const std::map<std::string, std::string>& sources) {
  TempDir dir;
  Sandbox sb(dir.path(), SandboxRole::kDirty);
  Snapshot snap;
  for (const auto& [name, src] : sources) snap[name + ".fml"] = src;
  auto staged = fwiki_test::StageSources(sb, snap);
  REQUIRE(staged.adm.admissible);
  return staged.adm.outcome.state;
}

RenderedPage Page(const std::string& name, const std::string& src,
                  const BuildState& state) {
  return RenderArticle(ParseArticle(src, ArticleName(name)),
                       LinkIndex::FromState(state));
}

DirtySet Everything(const DependencyGraph& g) {
  DirtySet d;
  d.changed = d.influenced = g.nodes();
  return d;
}

}  // namespace

TEST_CASE("a single-definition article has one anchor and no outlinks") {
  std::string src = "article one\nenviron\nbegin\ndef d1 : k := 3;\n";
  auto state = StateOf({{"one", src}});
  RenderedPage page = Page("one", src, state);
  CHECK(page.file_name == "one.html");
  CHECK(page.anchors == std::set<std::string>{"item-d1"});
  CHECK(page.outlinks.empty());
  CHECK(page.html.find("id=\"item-d1\"") != std::string::npos);
}

TEST_CASE("a cross-article reference links to the cited item") {
  std::string h =
      "article h\nenviron imports g;\nbegin\nthm t2 : tau1000 = 1618 by g:d1;\n";
  auto state = StateOf({{"g", kG}, {"h", h}});
  RenderedPage page = Page("h", h, state);
  CHECK(page.outlinks == Outlinks{{"g.html", ""}, {"g.html", "item-d1"}});
  CHECK(page.html.find("href=\"g.html#item-d1\">g:d1</a>") != std::string::npos);
  CHECK(page.html.find("href=\"g.html#item-d1\">tau1000</a>") !=
        std::string::npos);
}

TEST_CASE("identifier links follow the resolution order") {
  std::string s =
      "article s\nenviron imports g;\nbegin\n"
      "thm before : tau1000 = 1618 by evaluation;\n"
      "def d2 : tau1000 := 5;\n"
      "thm after : tau1000 = 5 by evaluation;\n";
  auto state = StateOf({{"g", kG}, {"s", s}});
  RenderedPage page = Page("s", s, state);
  size_t split = page.html.find("id=\"item-after\"");
  REQUIRE(split != std::string::npos);
  std::string head = page.html.substr(0, split), tail = page.html.substr(split);
  CHECK(head.find("href=\"g.html#item-d1\">tau1000") != std::string::npos);
  CHECK(tail.find("href=\"#item-d2\">tau1000") != std::string::npos);
  CHECK(tail.find("g.html#item-d1") == std::string::npos);
}

TEST_CASE("missing index entries are reported, not silently dropped") {
  std::string h =
      "article h\nenviron imports g;\nbegin\nthm t2 : tau1000 = 1618 by g:d1;\n";
  BuildState empty;
  CHECK_THROWS_AS(Page("h", h, empty), MissingIndexEntry);
  auto state = StateOf({{"g", kG}});
  std::string bad =
      "article h\nenviron imports g;\nbegin\nthm t2 : 1 = 1 by g:zz;\n";
  CHECK_THROWS_AS(Page("h", bad, state), MissingIndexEntry);
}

TEST_CASE("index page") {
  auto state = StateOf({{"g", kG},
                        {"b", "article b\nenviron\nbegin\n"},
                        {"a", "article a\nenviron\nbegin\ndef d : q := 1;\n"}});
  RenderedPage idx = RenderIndex(state);
  CHECK(idx.file_name == "index.html");
  CHECK(idx.html.find("3 articles") != std::string::npos);
  size_t a = idx.html.find("a.html"), b = idx.html.find("b.html"),
         g = idx.html.find("g.html");
  CHECK(a < b);
  CHECK(b < g);
  CHECK(idx.html.find("(1 item,") != std::string::npos);
  CHECK(idx.html.find("(0 items,") != std::string::npos);
  CHECK(idx.outlinks ==
        Outlinks{{"a.html", ""}, {"b.html", ""}, {"g.html", ""}});
  CHECK(RenderIndex(StateOf({{"g", kG}})).html.find("1 article<") !=
        std::string::npos);
}

TEST_CASE("rendering is deterministic") {
  std::mt19937_64 rng(9);
  auto lib = fwiki_test::RandomLibrary(rng, {});
  TempDir a, b;
  Sandbox sa(a.path(), SandboxRole::kDirty), sb(b.path(), SandboxRole::kDirty);
  fwiki_test::StageSources(sa, lib.Sources(), 1);
  fwiki_test::StageSources(sb, lib.Sources(), 4);
  CHECK(fwiki_test::ReadTree(sa.html_dir()) ==
        fwiki_test::ReadTree(sb.html_dir()));
  auto crawl = fwiki_test::CrawlSite(sa.html_dir());
  CHECK(crawl.pages == lib.articles.size() + 1);
  CHECK(crawl.broken.empty());
}

TEST_CASE("publish copies only what changed") {
  std::mt19937_64 rng(10);
  auto lib = fwiki_test::RandomLibrary(rng, {});
  TempDir work, pub;
  Sandbox sb(work.path(), SandboxRole::kClean);
  auto staged = fwiki_test::StageSources(sb, lib.Sources());
  PublishResult first = Publish(Everything(staged.graph), sb, pub.path());
  CHECK(first.written.size() == lib.articles.size() + 1);
  CHECK(fwiki_test::CrawlSite(pub.path()).broken.empty());

  std::string leaf;
  for (const auto& [n, a] : lib.articles)
    if (lib.Dependents(n).empty()) leaf = n;

  SUBCASE("leaf edit writes the page and the index") {
    auto src = lib.Sources();
    src[leaf + ".fml"] += "thm extra : 1 < 2 by evaluation;\n";
    auto edit = fwiki_test::StageSources(sb, src);
    REQUIRE(edit.adm.admissible);
    PublishResult r = Publish(edit.dirty, sb, pub.path());
    CHECK(r.written == std::set<std::string>{leaf + ".html", "index.html"});
    CHECK(r.removed.empty());
    CHECK(Publish(edit.dirty, sb, pub.path()).written.empty());
  }
  SUBCASE("deleting a leaf removes its page") {
    auto src = lib.Sources();
    src.erase(leaf + ".fml");
    auto del = fwiki_test::StageSources(sb, src);
    REQUIRE(del.adm.admissible);
    PublishResult r = Publish(del.dirty, sb, pub.path());
    CHECK(r.removed == std::set<std::string>{leaf + ".html"});
    CHECK(r.written == std::set<std::string>{"index.html"});
    CHECK_FALSE(fs::exists(pub.path() / (leaf + ".html")));
    CHECK(fwiki_test::CrawlSite(pub.path()).broken.empty());
  }
  SUBCASE("a broken link leaves the publish directory untouched") {
    auto before = fwiki_test::ReadTree(pub.path());
    WriteFileAtomic(sb.html_dir() / (leaf + ".html"),
                    "<html><a href=\"nowhere.html#x\">x</a></html>");
    DirtySet d;
    d.changed = d.influenced = {ArticleName(leaf)};
    try {
      Publish(d, sb, pub.path());
      FAIL("expected BrokenLink");
    } catch (const BrokenLink& e) {
      REQUIRE(e.links().size() == 1);
      CHECK(e.links()[0].page == leaf + ".html");
      CHECK(e.links()[0].href == "nowhere.html#x");
    }
    CHECK(fwiki_test::ReadTree(pub.path()) == before);
  }
}

TEST_CASE("find_broken_links agrees with the crawler oracle") {
  std::map<std::string, std::string> site = {
      {"a.html", "<p id=\"x\"><a href=\"b.html#y\">1</a><a href=\"#x\">2</a>"
                 "<a href=\"#z\">3</a><a href=\"https://e.org/\">4</a></p>"},
      {"b.html", "<p id=\"y\"><a href=\"c.html\">5</a></p>"}};
  auto broken = FindBrokenLinks(site);
  std::set<std::string> got;
  for (const auto& b : broken) got.insert(b.page + " -> " + b.href);

  TempDir dir;
  for (const auto& [f, html] : site) WriteFileAtomic(dir.path() / f, html);
  auto crawl = fwiki_test::CrawlSite(dir.path());
  CHECK(got == std::set<std::string>(crawl.broken.begin(), crawl.broken.end()));
  CHECK(got == std::set<std::string>{"a.html -> #z", "b.html -> c.html"});
}
