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

#include <algorithm>
#include <sstream>

#include "fwiki/backend.h"
#include "fwiki/hash.h"

namespace fwiki {
namespace {

// A content-addressed store: blobs under objects/, commit texts under
// commits/, one file per branch under refs/ and per tag under tags/.
// Commit ids are the SHA-256 of the commit text, which carries no
// timestamps, so identical histories get identical ids.
class PlainStore {
 public:
  explicit PlainStore(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }
  bool exists() const {
    std::error_code ec;
    return fs::exists(root_ / "refs", ec);
  }

  void Create() const {
    for (const char* d : {"objects", "commits", "refs", "tags"}) {
      std::error_code ec;
      fs::create_directories(root_ / d, ec);
      if (ec) throw IoError("cannot create " + (root_ / d).string());
    }
  }

  std::string PutBlob(const std::string& bytes) const {
    std::string id = Sha256(bytes).hex();
    fs::path p = root_ / "objects" / id;
    std::error_code ec;
    if (!fs::exists(p, ec)) WriteFileAtomic(p, bytes);
    return id;
  }

  std::string GetBlob(const std::string& id) const {
    return ReadFile(root_ / "objects" / id);
  }

  std::string PutCommit(const Snapshot& tree, const std::string& parent,
                        const CommitMeta& meta) const {
    std::ostringstream text;
    text << "parent " << (parent.empty() ? "-" : parent) << "\n";
    text << "author " << OneLine(meta.author) << "\n";
    for (const auto& [name, bytes] : tree)
      text << "file " << PutBlob(bytes) << " " << name << "\n";
    text << "\n" << meta.message;
    std::string body = text.str();
    std::string id = Sha256(body).hex();
    fs::path p = root_ / "commits" / id;
    std::error_code ec;
    if (!fs::exists(p, ec)) WriteFileAtomic(p, body);
    return id;
  }

  struct Parsed {
    CommitInfo info;
    std::map<std::string, std::string> files;  // name -> blob id
  };

  Parsed ReadCommit(const std::string& id) const {
    if (id.empty() || id.find('/') != std::string::npos)
      throw BackendError("bad commit id '" + id + "'");
    std::string text;
    try {
      text = ReadFile(root_ / "commits" / id);
    } catch (const IoError&) {
      throw BackendError("unknown commit " + id);
    }
    Parsed out;
    out.info.id = id;
    size_t pos = 0;
    while (pos < text.size()) {
      size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string_view line(text.data() + pos, eol - pos);
      pos = eol + 1;
      if (line.empty()) break;
      if (line.rfind("parent ", 0) == 0) {
        std::string p(line.substr(7));
        out.info.parent = p == "-" ? "" : p;
      } else if (line.rfind("author ", 0) == 0) {
        out.info.meta.author = std::string(line.substr(7));
      } else if (line.rfind("file ", 0) == 0) {
        std::string_view rest = line.substr(5);
        size_t sp = rest.find(' ');
        out.files[std::string(rest.substr(sp + 1))] =
            std::string(rest.substr(0, sp));
      }
    }
    if (pos < text.size()) out.info.meta.message = text.substr(pos);
    return out;
  }

  Snapshot Tree(const std::string& id) const {
    Snapshot s;
    for (const auto& [name, blob] : ReadCommit(id).files)
      s[name] = GetBlob(blob);
    return s;
  }

  std::optional<std::string> Ref(std::string_view kind,
                                 std::string_view name) const {
    fs::path p = root_ / std::string(kind) / std::string(name);
    std::error_code ec;
    if (!fs::exists(p, ec)) return std::nullopt;
    return Trim(ReadFile(p));
  }

  void SetRef(std::string_view kind, std::string_view name,
              const std::string& id) const {
    WriteFileAtomic(root_ / std::string(kind) / std::string(name), id + "\n");
  }

  std::vector<CommitInfo> Log(std::string_view branch) const {
    std::vector<CommitInfo> out;
    auto head = Ref("refs", branch);
    for (std::string id = head.value_or(""); !id.empty();) {
      CommitInfo c = ReadCommit(id).info;
      id = c.parent;
      out.push_back(std::move(c));
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Copies every commit reachable from |id| (and its blobs) from |other|.
  void Import(const PlainStore& other, const std::string& id) const {
    for (std::string cur = id; !cur.empty();) {
      fs::path dst = root_ / "commits" / cur;
      std::error_code ec;
      if (fs::exists(dst, ec)) break;
      Parsed c = other.ReadCommit(cur);
      for (const auto& [name, blob] : c.files) {
        if (!fs::exists(root_ / "objects" / blob, ec))
          WriteFileAtomic(root_ / "objects" / blob, other.GetBlob(blob));
      }
      WriteFileAtomic(dst, ReadFile(other.root_ / "commits" / cur));
      cur = c.info.parent;
    }
  }

 private:
  static std::string OneLine(const std::string& s) {
    std::string out = s;
    for (char& ch : out)
      if (ch == '\n' || ch == '\r') ch = ' ';
    return out;
  }

  fs::path root_;
};

class PlainBackend : public VcsBackend {
 public:
  PlainBackend(fs::path central, fs::path frontend)
      : central_(std::move(central)),
        store_(central_ / ".fwiki"),
        frontend_(frontend / ".fwiki") {}

  BackendKind kind() const override { return BackendKind::kPlainDir; }

  std::string Initialize(const Snapshot& seed,
                         const CommitMeta& meta) override {
    if (store_.exists()) throw BackendError("repository already initialized");
    store_.Create();
    WriteFileAtomic(central_ / ".fwikiignore", "*\n!*.fml\n");
    std::string id = store_.PutCommit(seed, "", meta);
    store_.SetRef("refs", "master", id);
    store_.SetRef("refs", "stable", id);
    WriteSources(central_, seed);
    return id;
  }

  std::optional<std::string> Head(std::string_view branch) const override {
    return store_.Ref("refs", branch);
  }

  void SetBranch(std::string_view branch, const std::string& id) override {
    store_.ReadCommit(id);
    store_.SetRef("refs", branch, id);
  }

  std::string CommitToMaster(const Snapshot& tree,
                             const CommitMeta& meta) override {
    std::string id = store_.PutCommit(tree, Head("master").value_or(""), meta);
    store_.SetRef("refs", "master", id);
    WriteSources(central_, tree);
    return id;
  }

  Snapshot Tree(const std::string& id) const override {
    return store_.Tree(id);
  }

  std::vector<CommitInfo> Log(std::string_view branch) const override {
    return store_.Log(branch);
  }

  bool IsAncestor(const std::string& ancestor,
                  const std::string& descendant) const override {
    for (std::string id = descendant; !id.empty();) {
      if (id == ancestor) return true;
      id = store_.ReadCommit(id).info.parent;
    }
    return false;
  }

  void CreateTag(const std::string& name, const std::string& id) override {
    if (store_.Ref("tags", name)) throw BackendError("tag exists: " + name);
    store_.SetRef("tags", name, id);
  }

  std::vector<std::string> Tags() const override {
    std::vector<std::string> out;
    std::error_code ec;
    for (fs::directory_iterator it(store_.root() / "tags", ec), end;
         !ec && it != end; it.increment(ec))
      out.push_back(it->path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  void CloneFrontend() override {
    frontend_.Create();
    ResetFrontend();
  }

  void PushFrontend(const Snapshot& tree, const CommitMeta& meta) override {
    std::string id =
        frontend_.PutCommit(tree, frontend_.Ref("refs", "master").value_or(""),
                            meta);
    frontend_.SetRef("refs", "master", id);
  }

  Snapshot FrontendTree() const override {
    auto head = frontend_.Ref("refs", "master");
    return head ? frontend_.Tree(*head) : Snapshot{};
  }

  CommitMeta FrontendHeadMeta() const override {
    auto head = frontend_.Ref("refs", "master");
    return head ? frontend_.ReadCommit(*head).info.meta : CommitMeta{};
  }

  void ResetFrontend() override {
    auto head = Head("master");
    if (!head) throw BackendError("central has no master");
    frontend_.Import(store_, *head);
    frontend_.SetRef("refs", "master", *head);
  }

  Snapshot Staged() const override { return ReadSources(central_); }

  void InstallHooks(const fs::path&) override {}

 private:
  fs::path central_;
  PlainStore store_;
  PlainStore frontend_;
};

}  // namespace

std::unique_ptr<VcsBackend> MakePlainBackend(const fs::path& central,
                                             const fs::path& frontend) {
  return std::make_unique<PlainBackend>(central, frontend);
}

}  // namespace fwiki
