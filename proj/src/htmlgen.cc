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

#include "fwiki/htmlgen.h"

#include <exception>
#include <string_view>

namespace fwiki {

namespace {

constexpr std::string_view kStyle =
    "body{font-family:sans-serif;max-width:50em;margin:2em auto;"
    "padding:0 1em;color:#222}\n"
    "section.item{border-left:3px solid #ccd;padding-left:1em;margin:1em 0}\n"
    "section.thm{border-color:#9b9}\n"
    "pre{margin:.3em 0}\n"
    "a{color:#2255aa;text-decoration:none}\n"
    "dfn{font-style:normal;font-weight:bold}\n";

std::string Escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string PageHead(std::string_view title) {
  std::string out = "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n"
                    "<meta charset=\"utf-8\">\n<title>";
  out += Escape(title);
  out += "</title>\n<style>\n";
  out += kStyle;
  out += "</style>\n</head>\n<body>\n";
  return out;
}

constexpr std::string_view kPageTail = "</body>\n</html>\n";

class PageWriter {
 public:
  PageWriter(const Article& article, const LinkIndex& index)
      : article_(article), index_(index) {
    for (size_t i = 0; i < article.items.size(); ++i) {
      const Item& item = article.items[i];
      if (item.is_definition()) own_defs_[item.definition().symbol] = i;
      label_pos_[item.label] = i;
    }
  }

  RenderedPage Render() {
    page_.file_name = PageFileName(article_.name);
    std::string& h = page_.html;
    h = PageHead(article_.name.str());
    h += "<h1>Article " + article_.name.str() + "</h1>\n";
    h += "<p class=\"environ\">";
    if (article_.environ.imports.empty()) {
      h += "no imports";
    } else {
      h += "imports ";
      for (size_t i = 0; i < article_.environ.imports.size(); ++i) {
        const ArticleName& imp = article_.environ.imports[i];
        if (i) h += ", ";
        h += Link(PageFileName(imp), "", imp.str());
      }
    }
    h += "</p>\n";
    for (size_t i = 0; i < article_.items.size(); ++i) RenderItem(i);
    h += kPageTail;
    return std::move(page_);
  }

 private:
  std::string Link(const std::string& page, const std::string& fragment,
                   std::string_view text) {
    std::string href;
    if (page.empty()) {
      href = "#" + fragment;
    } else {
      href = page;
      if (!fragment.empty()) href += "#" + fragment;
      page_.outlinks.emplace(page, fragment);
    }
    return "<a href=\"" + href + "\">" + Escape(text) + "</a>";
  }

  std::string IdentifierLink(const Expr& id, size_t position) {
    if (auto it = own_defs_.find(id.name);
        it != own_defs_.end() && it->second < position)
      return Link("", Anchor(article_.items[it->second].label), id.name);
    for (const auto& imp : article_.environ.imports) {
      if (auto label = index_.DefinitionLabel(imp, id.name))
        return Link(PageFileName(imp), Anchor(*label), id.name);
    }
    throw MissingIndexEntry("no definition of '" + id.name + "' visible from " +
                            article_.name.str());
  }

  void AppendExpr(const Expr& e, size_t position, std::string& out) {
    switch (e.kind) {
      case Expr::Kind::kLiteral:
        out += std::to_string(e.value);
        break;
      case Expr::Kind::kIdentifier:
        out += IdentifierLink(e, position);
        break;
      case Expr::Kind::kParen:
        out += '(';
        AppendExpr(e.operands[0], position, out);
        out += ')';
        break;
      case Expr::Kind::kBinary:
        AppendExpr(e.operands[0], position, out);
        out += e.op == BinaryOp::kAdd   ? " + "
               : e.op == BinaryOp::kSub ? " - "
                                        : " * ";
        AppendExpr(e.operands[1], position, out);
        break;
    }
  }

  std::string RefLink(const Ref& ref) {
    std::string text = (ref.article ? ref.article->str() + ":" : "") + ref.label;
    if (!ref.article) {
      if (!label_pos_.count(ref.label))
        throw MissingIndexEntry("no item '" + ref.label + "' in " +
                                article_.name.str());
      return Link("", Anchor(ref.label), text);
    }
    if (!index_.HasItem(*ref.article, ref.label))
      throw MissingIndexEntry("no item '" + ref.label + "' in " +
                              ref.article->str());
    return Link(PageFileName(*ref.article), Anchor(ref.label), text);
  }

  void RenderItem(size_t i) {
    const Item& item = article_.items[i];
    std::string anchor = Anchor(item.label);
    page_.anchors.insert(anchor);
    std::string& h = page_.html;
    if (item.is_definition()) {
      const Definition& d = item.definition();
      h += "<section class=\"item def\" id=\"" + anchor + "\">\n";
      h += "<h2>def " + item.label + "</h2>\n<pre><dfn>" + d.symbol +
           "</dfn> := ";
      AppendExpr(d.body, i, h);
      h += "</pre>\n";
    } else {
      const Theorem& t = item.theorem();
      h += "<section class=\"item thm\" id=\"" + anchor + "\">\n";
      h += "<h2>thm " + item.label + "</h2>\n<pre>";
      AppendExpr(t.lhs, i, h);
      h += " " + Escape(ToString(t.relation)) + " ";
      AppendExpr(t.rhs, i, h);
      h += "</pre>\n<p class=\"by\">by ";
      if (t.by_evaluation) {
        h += "evaluation";
      } else {
        for (size_t r = 0; r < t.refs.size(); ++r) {
          if (r) h += ", ";
          h += RefLink(t.refs[r]);
        }
      }
      h += "</p>\n";
    }
    h += "</section>\n";
  }

  const Article& article_;
  const LinkIndex& index_;
  std::map<std::string, size_t> own_defs_;
  std::map<std::string, size_t> label_pos_;
  RenderedPage page_;
};

// Attribute values of |attr| in |html|, in order.
std::vector<std::string> AttributeValues(std::string_view html,
                                         std::string_view attr) {
  std::vector<std::string> out;
  std::string needle = " " + std::string(attr) + "=\"";
  size_t pos = 0;
  while ((pos = html.find(needle, pos)) != std::string_view::npos) {
    pos += needle.size();
    size_t end = html.find('"', pos);
    if (end == std::string_view::npos) break;
    out.emplace_back(html.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

}  // namespace

LinkIndex LinkIndex::FromState(const BuildState& state) {
  LinkIndex idx;
  for (const auto& [name, rec] : state.records) {
    if (rec.verdict != Verdict::kVerified) continue;
    auto& defs = idx.definitions_[name];
    auto& items = idx.items_[name];
    for (const auto& e : rec.exports.entries) {
      items.insert(e.label);
      if (e.kind == ItemKind::kDefinition) defs[e.symbol] = e.label;
    }
  }
  return idx;
}

std::optional<std::string> LinkIndex::DefinitionLabel(
    const ArticleName& article, const std::string& symbol) const {
  auto a = definitions_.find(article);
  if (a == definitions_.end()) return std::nullopt;
  auto s = a->second.find(symbol);
  if (s == a->second.end()) return std::nullopt;
  return s->second;
}

bool LinkIndex::HasItem(const ArticleName& article,
                        const std::string& label) const {
  auto a = items_.find(article);
  return a != items_.end() && a->second.count(label);
}

bool LinkIndex::HasArticle(const ArticleName& article) const {
  return items_.count(article) != 0;
}

std::string PageFileName(const ArticleName& article) {
  return article.str() + ".html";
}

std::string Anchor(const std::string& label) { return "item-" + label; }

RenderedPage RenderArticle(const Article& article, const LinkIndex& index) {
  for (const auto& imp : article.environ.imports) {
    if (!index.HasArticle(imp))
      throw MissingIndexEntry("import '" + imp.str() + "' is not indexed");
  }
  return PageWriter(article, index).Render();
}

RenderedPage RenderIndex(const BuildState& library) {
  RenderedPage page;
  page.file_name = "index.html";
  std::string& h = page.html;
  h = PageHead("Library index");
  h += "<h1>Library index</h1>\n<p>" + std::to_string(library.records.size()) +
       (library.records.size() == 1 ? " article" : " articles") +
       "</p>\n<ul>\n";
  for (const auto& [name, rec] : library.records) {
    size_t n = rec.exports.entries.size();
    std::string file = PageFileName(name);
    h += "<li><a href=\"" + file + "\">" + name.str() + "</a> (" +
         std::to_string(n) + (n == 1 ? " item" : " items") + ", source " +
         rec.source_hash.hex().substr(0, 12) + ")</li>\n";
    page.outlinks.emplace(file, "");
  }
  h += "</ul>\n";
  h += kPageTail;
  return page;
}

std::set<std::string> RenderIntoSandbox(const Sandbox& sandbox,
                                        const BuildState& state,
                                        const std::set<ArticleName>& articles,
                                        const std::set<ArticleName>& deleted,
                                        FileSink& sink) {
  LinkIndex index = LinkIndex::FromState(state);
  std::vector<ArticleName> todo(articles.begin(), articles.end());
  std::vector<RenderedPage> pages(todo.size());
  std::vector<std::exception_ptr> errors(todo.size());
  const long n = static_cast<long>(todo.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      std::string src = ReadFile(sandbox.root() / todo[i].file_name());
      pages[i] = RenderArticle(ParseArticle(src, todo[i]), index);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::set<std::string> touched;
  for (const auto& page : pages) {
    sink.Write(sandbox.html_dir() / page.file_name, page.html);
    touched.insert("html/" + page.file_name);
  }
  for (const auto& d : deleted) {
    fs::path p = sandbox.html_dir() / PageFileName(d);
    std::error_code ec;
    if (fs::exists(p, ec)) {
      sink.Remove(p);
      touched.insert("html/" + PageFileName(d));
    }
  }
  RenderedPage idx = RenderIndex(state);
  sink.Write(sandbox.html_dir() / idx.file_name, idx.html);
  touched.insert("html/index.html");
  return touched;
}

namespace {

std::string DescribeBroken(const std::vector<BrokenLinkInfo>& links) {
  std::string s = "broken links:";
  for (const auto& l : links) s += " " + l.page + " -> " + l.href + ";";
  return s;
}

}  // namespace

BrokenLink::BrokenLink(std::vector<BrokenLinkInfo> links)
    : std::runtime_error(DescribeBroken(links)), links_(std::move(links)) {}

std::vector<BrokenLinkInfo> FindBrokenLinks(
    const std::map<std::string, std::string>& site) {
  std::map<std::string, std::set<std::string>> ids;
  for (const auto& [page, html] : site) {
    auto& s = ids[page];
    for (auto& id : AttributeValues(html, "id")) s.insert(std::move(id));
  }
  std::vector<BrokenLinkInfo> broken;
  for (const auto& [page, html] : site) {
    for (const auto& href : AttributeValues(html, "href")) {
      if (href.find("://") != std::string::npos) continue;
      size_t hash = href.find('#');
      std::string target = href.substr(0, hash);
      std::string fragment =
          hash == std::string::npos ? std::string() : href.substr(hash + 1);
      if (target.empty()) target = page;
      auto it = ids.find(target);
      if (it == ids.end() || (!fragment.empty() && !it->second.count(fragment)))
        broken.push_back({page, href});
    }
  }
  return broken;
}

PublishResult Publish(const DirtySet& dirty, const Sandbox& sandbox,
                      const fs::path& publish_dir) {
  std::map<std::string, std::string> site;
  std::error_code ec;
  if (fs::exists(publish_dir, ec)) {
    for (fs::directory_iterator it(publish_dir, ec), end; !ec && it != end;
         it.increment(ec)) {
      if (it->is_regular_file() && it->path().extension() == ".html")
        site[it->path().filename().string()] = ReadFile(it->path());
    }
    if (ec) throw IoError("cannot list " + publish_dir.string());
  }
  const std::map<std::string, std::string> before = site;

  std::set<std::string> removed;
  for (const auto& d : dirty.deleted) {
    if (dirty.influenced.count(d)) continue;
    if (site.erase(PageFileName(d))) removed.insert(PageFileName(d));
  }
  std::set<std::string> candidates{"index.html"};
  for (const auto& a : dirty.influenced) candidates.insert(PageFileName(a));
  for (const auto& file : candidates)
    site[file] = ReadFile(sandbox.html_dir() / file);

  auto broken = FindBrokenLinks(site);
  if (!broken.empty()) throw BrokenLink(std::move(broken));

  fs::create_directories(publish_dir, ec);
  if (ec) throw IoError("cannot create " + publish_dir.string());
  PublishResult result;
  for (const auto& file : candidates) {
    auto old = before.find(file);
    if (old != before.end() && old->second == site[file]) continue;
    WriteFileAtomic(publish_dir / file, site[file]);
    result.written.insert(file);
  }
  for (const auto& file : removed) {
    fs::remove(publish_dir / file, ec);
    if (ec) throw IoError("cannot remove " + (publish_dir / file).string());
    result.removed.insert(file);
  }
  return result;
}

}  // namespace fwiki
