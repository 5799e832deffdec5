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

#ifndef FWIKI_HTMLGEN_H_
#define FWIKI_HTMLGEN_H_

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fwiki/article.h"
#include "fwiki/depgraph.h"
#include "fwiki/sandbox.h"
#include "fwiki/verifier.h"

namespace fwiki {

/// Where symbols and labels of verified articles live in the rendered site.
class LinkIndex {
 public:
  static LinkIndex FromState(const BuildState& state);

  /// Label of the definition binding |symbol| in |article|, if any.
  std::optional<std::string> DefinitionLabel(const ArticleName& article,
                                             const std::string& symbol) const;
  bool HasItem(const ArticleName& article, const std::string& label) const;
  bool HasArticle(const ArticleName& article) const;

 private:
  std::map<ArticleName, std::map<std::string, std::string>> definitions_;
  std::map<ArticleName, std::set<std::string>> items_;
};

std::string PageFileName(const ArticleName& article);  // "<article>.html"
std::string Anchor(const std::string& label);          // "item-<label>"

struct RenderedPage {
  std::string file_name;
  std::string html;
  std::set<std::string> anchors;
  /// Cross-page links as (page file name, fragment); fragment may be empty.
  std::set<std::pair<std::string, std::string>> outlinks;
};

class MissingIndexEntry : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Deterministic page for a verified article. Identifiers link to their
/// definitions using the verifier's resolution order; references link to
/// the cited items.
RenderedPage RenderArticle(const Article& article, const LinkIndex& index);

/// Landing page listing every article alphabetically.
RenderedPage RenderIndex(const BuildState& library);

/// Renders |articles| from |sandbox| sources into `html/`, rewrites
/// `html/index.html` and removes pages of |deleted|. Returns the files
/// written or removed, relative to the sandbox root.
std::set<std::string> RenderIntoSandbox(const Sandbox& sandbox,
                                        const BuildState& state,
                                        const std::set<ArticleName>& articles,
                                        const std::set<ArticleName>& deleted,
                                        FileSink& sink = DefaultSink());

struct BrokenLinkInfo {
  std::string page;
  std::string href;
};

class BrokenLink : public std::runtime_error {
 public:
  explicit BrokenLink(std::vector<BrokenLinkInfo> links);
  const std::vector<BrokenLinkInfo>& links() const { return links_; }

 private:
  std::vector<BrokenLinkInfo> links_;
};

/// Every relative href in |site| (file name -> html) that names a missing
/// page or a missing fragment.
std::vector<BrokenLinkInfo> FindBrokenLinks(
    const std::map<std::string, std::string>& site);

struct PublishResult {
  std::set<std::string> written;
  std::set<std::string> removed;
};

/// Copies the pages of |dirty.influenced| and the index from the sandbox
/// into |publish_dir| when their bytes differ, removes pages of deleted
/// articles, and refuses (BrokenLink) before touching anything if the
/// resulting site would contain a broken link.
PublishResult Publish(const DirtySet& dirty, const Sandbox& sandbox,
                      const fs::path& publish_dir);

}  // namespace fwiki

#endif  // FWIKI_HTMLGEN_H_
