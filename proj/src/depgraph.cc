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

#include "fwiki/depgraph.h"

#include <algorithm>
#include <deque>
#include <exception>
#include <optional>
#include <sstream>

namespace fwiki {

std::string DepManifest::Serialize() const {
  std::string out = "article " + article.str() + "\nhash " +
                    source_hash.hex() + "\n";
  for (const auto& d : deps) out += "dep " + d.str() + "\n";
  return out;
}

DepManifest DepManifest::Parse(std::string_view text) {
  DepManifest m;
  bool have_article = false, have_hash = false;
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw std::runtime_error("manifest: missing final newline");
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    size_t sp = line.find(' ');
    if (sp == std::string_view::npos)
      throw std::runtime_error("manifest: malformed line " +
                               std::to_string(line_no));
    std::string_view key = line.substr(0, sp), value = line.substr(sp + 1);
    if (key == "article" && line_no == 1) {
      auto name = ArticleName::Parse(value);
      if (!name) throw std::runtime_error("manifest: bad article name");
      m.article = *name;
      have_article = true;
    } else if (key == "hash" && line_no == 2) {
      auto d = Digest::FromHex(value);
      if (!d) throw std::runtime_error("manifest: bad hash");
      m.source_hash = *d;
      have_hash = true;
    } else if (key == "dep" && line_no > 2) {
      auto name = ArticleName::Parse(value);
      if (!name) throw std::runtime_error("manifest: bad dep name");
      if (!m.deps.empty() && !(m.deps.back() < *name))
        throw std::runtime_error("manifest: deps not sorted");
      m.deps.push_back(*name);
    } else {
      throw std::runtime_error("manifest: unexpected line " +
                               std::to_string(line_no));
    }
  }
  if (!have_article || !have_hash)
    throw std::runtime_error("manifest: incomplete");
  return m;
}

namespace {

DepManifest ManifestFromSource(std::string_view source,
                               const ArticleName& expected) {
  ArticleHeader header = ParseArticleHeader(source);
  if (header.name != expected)
    throw ParseError(ParseErrorKind::kNameMismatch, {1, 1},
                     "article is named '" + header.name.str() +
                         "' but file is '" + expected.file_name() + "'");
  DepManifest m;
  m.article = expected;
  m.deps = header.environ.imports;
  std::sort(m.deps.begin(), m.deps.end());
  m.deps.erase(std::unique(m.deps.begin(), m.deps.end()), m.deps.end());
  m.source_hash = Sha256(source);
  return m;
}

ArticleName NameFromPath(const fs::path& p) {
  std::string stem = p.stem().string();
  auto name = ArticleName::Parse(stem);
  if (!name)
    throw ParseError(ParseErrorKind::kInvalidName, {1, 1},
                     "'" + p.filename().string() +
                         "' is not a valid article file name");
  return *name;
}

std::optional<DepManifest> ReadManifest(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    return DepManifest::Parse(ReadFile(path));
  } catch (const std::runtime_error&) {
    return std::nullopt;  // unreadable manifests are simply stale
  }
}

std::vector<fs::path> SourceFiles(const fs::path& dir, std::string_view ext) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end;
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ext)
      out.push_back(it->path());
  }
  if (ec) throw IoError("cannot list " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

DepManifest ExtractDeps(const fs::path& article_path) {
  ArticleName name = NameFromPath(article_path);
  return ManifestFromSource(ReadFile(article_path), name);
}

RefreshResult RefreshManifests(const fs::path& library_dir,
                               const fs::path& manifest_dir,
                               FileSink& sink) {
  std::vector<fs::path> sources = SourceFiles(library_dir, kSourceExtension);

  struct Outcome {
    std::optional<DepManifest> fresh;  // set when a rewrite is needed
    std::optional<ParseError> error;
    std::exception_ptr io_error;
  };
  std::vector<Outcome> outcomes(sources.size());

  // Hashing and header parsing are independent per file; writes below are
  // serialized.
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < sources.size(); ++i) {
    Outcome& o = outcomes[i];
    try {
      ArticleName name = NameFromPath(sources[i]);
      std::string bytes = ReadFile(sources[i]);
      Digest h = Sha256(bytes);
      auto stored = ReadManifest(manifest_dir / (name.str() + ".d"));
      if (stored && stored->source_hash == h && stored->article == name)
        continue;
      o.fresh = ManifestFromSource(bytes, name);
    } catch (const ParseError& e) {
      o.error = e;
    } catch (...) {
      o.io_error = std::current_exception();
    }
  }

  RefreshResult result;
  std::set<std::string> live;
  for (size_t i = 0; i < sources.size(); ++i) {
    Outcome& o = outcomes[i];
    if (o.io_error) std::rethrow_exception(o.io_error);
    std::string stem = sources[i].stem().string();
    live.insert(stem);
    if (o.error) {
      result.errors.emplace(sources[i].filename().string(), *o.error);
      // Drop the stale manifest so the next refresh retries this file.
      fs::path stale = manifest_dir / (stem + ".d");
      std::error_code ec;
      if (fs::exists(stale, ec)) sink.Remove(stale);
      continue;
    }
    if (o.fresh) {
      sink.Write(manifest_dir / (stem + ".d"), o.fresh->Serialize());
      result.refreshed.insert(o.fresh->article);
    }
  }

  for (const fs::path& m : SourceFiles(manifest_dir, ".d")) {
    std::string stem = m.stem().string();
    if (live.count(stem)) continue;
    sink.Remove(m);
    if (auto name = ArticleName::Parse(stem)) result.refreshed.insert(*name);
  }
  return result;
}

std::vector<DepManifest> LoadManifests(const fs::path& manifest_dir) {
  std::vector<DepManifest> out;
  for (const fs::path& m : SourceFiles(manifest_dir, ".d")) {
    try {
      out.push_back(DepManifest::Parse(ReadFile(m)));
    } catch (const IoError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw IoError(m.string() + ": " + e.what());
    }
  }
  return out;
}

const std::set<ArticleName>& DependencyGraph::imports(
    const ArticleName& a) const {
  static const std::set<ArticleName> kEmpty;
  auto it = edges_.find(a);
  return it == edges_.end() ? kEmpty : it->second;
}

const std::set<ArticleName>& DependencyGraph::dependents(
    const ArticleName& a) const {
  static const std::set<ArticleName> kEmpty;
  auto it = reverse_edges_.find(a);
  return it == reverse_edges_.end() ? kEmpty : it->second;
}

const Digest& DependencyGraph::source_hash(const ArticleName& a) const {
  static const Digest kNone;
  auto it = source_hashes_.find(a);
  return it == source_hashes_.end() ? kNone : it->second;
}

size_t DependencyGraph::edge_count() const {
  size_t n = 0;
  for (const auto& [_, targets] : edges_) n += targets.size();
  return n;
}

namespace {

std::string DescribeCycle(const std::vector<ArticleName>& cycle) {
  std::string s = "import cycle:";
  for (const auto& a : cycle) s += " " + a.str() + " ->";
  s += " " + cycle.front().str();
  return s;
}

std::string DescribeDangling(
    const std::vector<std::pair<ArticleName, ArticleName>>& dangling) {
  std::string s = "dangling import:";
  for (const auto& [from, missing] : dangling)
    s += " " + from.str() + " imports missing " + missing.str() + ";";
  return s;
}

}  // namespace

GraphError::GraphError(std::vector<ArticleName> cycle)
    : std::runtime_error(DescribeCycle(cycle)),
      kind_(Kind::kCycle),
      cycle_(std::move(cycle)) {}

GraphError::GraphError(
    std::vector<std::pair<ArticleName, ArticleName>> dangling)
    : std::runtime_error(DescribeDangling(dangling)),
      kind_(Kind::kDangling),
      dangling_(std::move(dangling)) {}

DependencyGraph BuildGraph(const std::vector<DepManifest>& manifests) {
  DependencyGraph g;
  for (const auto& m : manifests) {
    if (!g.nodes_.insert(m.article).second)
      throw std::invalid_argument("duplicate manifest for " + m.article.str());
    g.source_hashes_[m.article] = m.source_hash;
  }
  std::vector<std::pair<ArticleName, ArticleName>> dangling;
  for (const auto& m : manifests) {
    auto& out = g.edges_[m.article];
    for (const auto& d : m.deps) {
      if (!g.nodes_.count(d)) {
        dangling.emplace_back(m.article, d);
        continue;
      }
      out.insert(d);
      g.reverse_edges_[d].insert(m.article);
    }
  }
  if (!dangling.empty()) {
    std::sort(dangling.begin(), dangling.end());
    throw GraphError(std::move(dangling));
  }

  // Iterative DFS in name order; a gray successor closes a cycle.
  enum class Color { kWhite, kGray, kBlack };
  std::map<ArticleName, Color> color;
  for (const auto& n : g.nodes_) color[n] = Color::kWhite;
  for (const auto& root : g.nodes_) {
    if (color[root] != Color::kWhite) continue;
    std::vector<std::pair<ArticleName, std::set<ArticleName>::const_iterator>>
        stack;
    color[root] = Color::kGray;
    stack.emplace_back(root, g.imports(root).begin());
    while (!stack.empty()) {
      auto& [node, it] = stack.back();
      if (it == g.imports(node).end()) {
        color[node] = Color::kBlack;
        stack.pop_back();
        continue;
      }
      const ArticleName& next = *it++;
      if (color[next] == Color::kGray) {
        std::vector<ArticleName> cycle;
        auto start = std::find_if(stack.begin(), stack.end(),
                                  [&](const auto& f) { return f.first == next; });
        for (auto f = start; f != stack.end(); ++f) cycle.push_back(f->first);
        throw GraphError(std::move(cycle));
      }
      if (color[next] == Color::kWhite) {
        color[next] = Color::kGray;
        stack.emplace_back(next, g.imports(next).begin());
      }
    }
  }
  return g;
}

DirtySet ComputeDirty(const DependencyGraph& graph,
                      const std::set<ArticleName>& changed,
                      const std::set<ArticleName>& deleted) {
  DirtySet dirty;
  dirty.changed = changed;
  dirty.deleted = deleted;
  std::deque<ArticleName> queue;
  std::set<ArticleName> seen;
  auto seed = [&](const ArticleName& a) {
    if (seen.insert(a).second) queue.push_back(a);
  };
  for (const auto& a : changed) seed(a);
  for (const auto& a : deleted) seed(a);
  while (!queue.empty()) {
    ArticleName a = std::move(queue.front());
    queue.pop_front();
    for (const auto& dep : graph.dependents(a)) seed(dep);
  }
  for (const auto& a : seen) {
    if (!deleted.count(a) || changed.count(a)) dirty.influenced.insert(a);
  }
  return dirty;
}

Layers TopoOrder(const DependencyGraph& graph,
                 const std::set<ArticleName>& subset) {
  if (subset.empty()) return {};
  // Kahn order over the whole graph (imports before importers).
  std::map<ArticleName, size_t> pending;
  std::deque<ArticleName> ready;
  for (const auto& n : graph.nodes()) {
    pending[n] = graph.imports(n).size();
    if (pending[n] == 0) ready.push_back(n);
  }
  // depth[v]: number of subset members on the longest import path below v,
  // not counting v itself.
  std::map<ArticleName, size_t> depth;
  std::map<ArticleName, size_t> layer_of;
  while (!ready.empty()) {
    ArticleName v = std::move(ready.front());
    ready.pop_front();
    size_t d = 0;
    for (const auto& u : graph.imports(v)) {
      size_t through = depth[u] + (subset.count(u) ? 1 : 0);
      d = std::max(d, through);
    }
    depth[v] = d;
    if (subset.count(v)) layer_of[v] = d;
    for (const auto& w : graph.dependents(v)) {
      if (--pending[w] == 0) ready.push_back(w);
    }
  }
  Layers layers;
  for (const auto& a : subset) {
    size_t l = 0;
    if (auto it = layer_of.find(a); it != layer_of.end()) l = it->second;
    if (layers.size() <= l) layers.resize(l + 1);
    layers[l].insert(a);
  }
  std::erase_if(layers, [](const auto& s) { return s.empty(); });
  return layers;
}

}  // namespace fwiki
