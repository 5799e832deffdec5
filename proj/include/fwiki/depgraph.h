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

#ifndef FWIKI_DEPGRAPH_H_
#define FWIKI_DEPGRAPH_H_

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fwiki/article.h"
#include "fwiki/hash.h"
#include "fwiki/util.h"

namespace fwiki {

/// Generated per-article dependency manifest, stored as `deps/<name>.d`:
///
///   article <name>
///   hash <64 lowercase hex>
///   dep <imported-name>      (sorted, zero or more)
struct DepManifest {
  ArticleName article;
  std::vector<ArticleName> deps;  // sorted, deduplicated
  Digest source_hash;

  std::string Serialize() const;
  /// Throws std::runtime_error on malformed text.
  static DepManifest Parse(std::string_view text);

  bool operator==(const DepManifest&) const = default;
};

/// Manifest for one source file, from its header only.
/// Throws IoError or ParseError.
DepManifest ExtractDeps(const fs::path& article_path);

struct RefreshResult {
  std::set<ArticleName> refreshed;  // rewritten or removed manifests
  std::map<std::string, ParseError> errors;  // keyed by source file name
};

/// Brings `manifest_dir` in line with the `*.fml` files in `library_dir`.
/// Only stale manifests are rewritten; manifests whose article vanished are
/// removed. Parse failures are collected, not thrown.
RefreshResult RefreshManifests(const fs::path& library_dir,
                               const fs::path& manifest_dir,
                               FileSink& sink = DefaultSink());

std::vector<DepManifest> LoadManifests(const fs::path& manifest_dir);

class DependencyGraph {
 public:
  const std::set<ArticleName>& nodes() const { return nodes_; }
  bool contains(const ArticleName& a) const { return nodes_.count(a) != 0; }
  /// Articles |a| imports.
  const std::set<ArticleName>& imports(const ArticleName& a) const;
  /// Articles importing |a|.
  const std::set<ArticleName>& dependents(const ArticleName& a) const;
  size_t edge_count() const;
  /// Source digest recorded in |a|'s manifest.
  const Digest& source_hash(const ArticleName& a) const;

 private:
  friend DependencyGraph BuildGraph(const std::vector<DepManifest>&);

  std::set<ArticleName> nodes_;
  std::map<ArticleName, std::set<ArticleName>> edges_;
  std::map<ArticleName, std::set<ArticleName>> reverse_edges_;
  std::map<ArticleName, Digest> source_hashes_;
};

class GraphError : public std::runtime_error {
 public:
  enum class Kind { kCycle, kDangling };

  GraphError(std::vector<ArticleName> cycle);
  GraphError(std::vector<std::pair<ArticleName, ArticleName>> dangling);

  Kind kind() const { return kind_; }
  /// Articles on the cycle in import order; the last imports the first.
  const std::vector<ArticleName>& cycle() const { return cycle_; }
  /// (importer, missing) pairs.
  const std::vector<std::pair<ArticleName, ArticleName>>& dangling() const {
    return dangling_;
  }

 private:
  Kind kind_;
  std::vector<ArticleName> cycle_;
  std::vector<std::pair<ArticleName, ArticleName>> dangling_;
};

/// Throws GraphError on dangling imports (reported first) or cycles.
DependencyGraph BuildGraph(const std::vector<DepManifest>& manifests);

struct DirtySet {
  std::set<ArticleName> changed;
  std::set<ArticleName> influenced;  // changed plus everything importing it
  std::set<ArticleName> deleted;

  bool empty() const {
    return changed.empty() && influenced.empty() && deleted.empty();
  }
};

/// Change propagation: reverse closure over import edges, O(V+E).
DirtySet ComputeDirty(const DependencyGraph& graph,
                      const std::set<ArticleName>& changed,
                      const std::set<ArticleName>& deleted);

using Layers = std::vector<std::set<ArticleName>>;

/// Antichain layering of |subset|: an article lands after everything in
/// |subset| it reaches through imports, including paths through articles
/// outside |subset|.
Layers TopoOrder(const DependencyGraph& graph,
                 const std::set<ArticleName>& subset);

}  // namespace fwiki

#endif  // FWIKI_DEPGRAPH_H_
