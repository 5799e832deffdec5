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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>

#include "fwiki/backend.h"

extern char** environ;

namespace fwiki {
namespace {

struct ProcResult {
  int status = -1;
  std::string out;
  std::string err;
};

// Runs |argv| in |cwd| feeding |input| to stdin. The environment is the
// caller's minus every GIT_* variable: when we run inside a hook, git
// exports GIT_DIR and friends pointing at the repository that fired the
// hook, which is not necessarily the one we are about to talk to.
ProcResult RunProcess(const std::vector<std::string>& argv,
                      const fs::path& cwd, std::string_view input,
                      bool keep_index_file = false) {
  std::vector<std::string> env_store;
  for (char** e = environ; *e; ++e) {
    std::string_view kv(*e);
    if (kv.rfind("GIT_", 0) == 0 &&
        !(keep_index_file && kv.rfind("GIT_INDEX_FILE=", 0) == 0))
      continue;
    env_store.emplace_back(kv);
  }
  std::vector<char*> envp;
  for (auto& s : env_store) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args = argv;
  std::vector<char*> cargv;
  for (auto& s : args) cargv.push_back(s.data());
  cargv.push_back(nullptr);

  int in[2], out[2], err[2];
  if (pipe2(in, O_CLOEXEC) || pipe2(out, O_CLOEXEC) || pipe2(err, O_CLOEXEC))
    throw BackendError(std::string("pipe: ") + std::strerror(errno));
  pid_t pid = fork();
  if (pid < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in[0], 0);
    dup2(out[1], 1);
    dup2(err[1], 2);
    if (chdir(cwd.c_str()) != 0) _exit(127);
    execvpe(cargv[0], cargv.data(), envp.data());
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  close(err[1]);

  ProcResult r;
  size_t written = 0;
  int in_fd = in[1];
  if (input.empty()) {
    close(in_fd);
    in_fd = -1;
  } else {
    fcntl(in_fd, F_SETFL, O_NONBLOCK);
  }
  int out_fd = out[0], err_fd = err[0];
  char buf[65536];
  while (out_fd >= 0 || err_fd >= 0 || in_fd >= 0) {
    pollfd fds[3];
    int n = 0;
    if (in_fd >= 0) fds[n++] = {in_fd, POLLOUT, 0};
    if (out_fd >= 0) fds[n++] = {out_fd, POLLIN, 0};
    if (err_fd >= 0) fds[n++] = {err_fd, POLLIN, 0};
    if (poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < n; ++i) {
      if (!fds[i].revents) continue;
      int fd = fds[i].fd;
      if (fd == in_fd) {
        ssize_t w = write(fd, input.data() + written, input.size() - written);
        if (w > 0) written += static_cast<size_t>(w);
        if (w < 0 && errno != EAGAIN) written = input.size();
        if (written == input.size()) {
          close(in_fd);
          in_fd = -1;
        }
        continue;
      }
      ssize_t got = read(fd, buf, sizeof buf);
      if (got > 0) {
        (fd == out_fd ? r.out : r.err).append(buf, static_cast<size_t>(got));
      } else if (got == 0 || errno != EINTR) {
        close(fd);
        (fd == out_fd ? out_fd : err_fd) = -1;
      }
    }
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
  return r;
}

const std::vector<std::string> kIdentity = {
    "-c", "user.name=fwiki",      "-c", "user.email=fwiki@localhost",
    "-c", "commit.gpgsign=false", "-c", "core.hooksPath=/dev/null",
    "-c", "init.defaultBranch=master"};

class Git {
 public:
  explicit Git(fs::path dir) : dir_(std::move(dir)) {}

  ProcResult Try(std::vector<std::string> args, std::string_view input = {},
                 bool keep_index_file = false) const {
    std::vector<std::string> argv{"git"};
    argv.insert(argv.end(), kIdentity.begin(), kIdentity.end());
    argv.insert(argv.end(), args.begin(), args.end());
    return RunProcess(argv, dir_, input, keep_index_file);
  }

  std::string Run(std::vector<std::string> args, std::string_view input = {},
                  bool keep_index_file = false) const {
    ProcResult r = Try(args, input, keep_index_file);
    if (r.status != 0) {
      std::string cmd;
      for (const auto& a : args) cmd += " " + a;
      throw BackendError("git" + cmd + " failed: " + Trim(r.err));
    }
    return r.out;
  }

  // Reads many blobs in one process.
  std::map<std::string, std::string> Blobs(
      const std::vector<std::string>& ids) const {
    std::map<std::string, std::string> out;
    if (ids.empty()) return out;
    std::string input;
    for (const auto& id : ids) input += id + "\n";
    std::string raw = Run({"cat-file", "--batch"}, input);
    size_t pos = 0;
    for (const auto& id : ids) {
      size_t eol = raw.find('\n', pos);
      if (eol == std::string::npos) throw BackendError("short cat-file output");
      std::istringstream header(raw.substr(pos, eol - pos));
      std::string oid, type;
      size_t size = 0;
      header >> oid >> type >> size;
      if (type != "blob") throw BackendError("object " + id + " is not a blob");
      out[id] = raw.substr(eol + 1, size);
      pos = eol + 1 + size + 1;
    }
    return out;
  }

  // Parses NUL-separated "meta\tpath" records, keeping source files.
  Snapshot Listing(const std::string& raw, size_t oid_field) const {
    std::vector<std::pair<std::string, std::string>> entries;
    size_t pos = 0;
    while (pos < raw.size()) {
      size_t end = raw.find('\0', pos);
      if (end == std::string::npos) end = raw.size();
      std::string rec = raw.substr(pos, end - pos);
      pos = end + 1;
      size_t tab = rec.find('\t');
      if (tab == std::string::npos) continue;
      std::string path = rec.substr(tab + 1);
      if (path.find('/') != std::string::npos ||
          path.size() < 5 || path.compare(path.size() - 4, 4, ".fml") != 0)
        continue;
      std::istringstream meta(rec.substr(0, tab));
      std::string field;
      for (size_t i = 0; i <= oid_field; ++i) meta >> field;
      entries.emplace_back(path, field);
    }
    std::vector<std::string> ids;
    for (const auto& e : entries) ids.push_back(e.second);
    auto blobs = Blobs(ids);
    Snapshot s;
    for (const auto& [path, id] : entries) s[path] = blobs.at(id);
    return s;
  }

  Snapshot Tree(const std::string& rev) const {
    return Listing(Run({"ls-tree", "-z", rev}), 2);
  }

  std::optional<std::string> Resolve(const std::string& ref) const {
    ProcResult r = Try({"rev-parse", "--verify", "-q", ref + "^{commit}"});
    if (r.status != 0) return std::nullopt;
    return Trim(r.out);
  }

  CommitMeta Meta(const std::string& rev) const {
    std::string raw = Run({"log", "-1", "--format=%an%x00%B", rev});
    CommitMeta m;
    size_t nul = raw.find('\0');
    m.author = raw.substr(0, nul);
    m.message = nul == std::string::npos ? "" : raw.substr(nul + 1);
    StripTrailingNewlines(m.message);
    return m;
  }

  static void StripTrailingNewlines(std::string& s) {
    while (!s.empty() && s.back() == '\n') s.pop_back();
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

std::string AuthorArg(const CommitMeta& meta) {
  std::string name = meta.author.empty() ? "anonymous" : meta.author;
  for (char& c : name)
    if (c == '<' || c == '>' || c == '\n') c = ' ';
  return name + " <" + "fwiki@localhost>";
}

void WriteHook(const fs::path& file, const std::string& body) {
  WriteFileAtomic(file, "#!/bin/sh\n" + body);
  fs::permissions(file, fs::perms::owner_all | fs::perms::group_read |
                            fs::perms::group_exec | fs::perms::others_read |
                            fs::perms::others_exec);
}

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

class GitBackend : public VcsBackend {
 public:
  GitBackend(fs::path central, fs::path frontend)
      : central_(std::move(central)),
        frontend_path_(std::move(frontend)),
        git_(central_),
        front_(frontend_path_) {}

  BackendKind kind() const override { return BackendKind::kExternalDvcs; }

  std::string Initialize(const Snapshot& seed,
                         const CommitMeta& meta) override {
    std::error_code ec;
    if (fs::exists(central_ / ".git", ec))
      throw BackendError("repository already initialized");
    fs::create_directories(central_, ec);
    git_.Run({"init", "-q", "-b", "master", "."});
    WriteFileAtomic(central_ / ".gitignore", "/*\n!/*.fml\n!/.gitignore\n");
    std::string id = CommitToMaster(seed, meta);
    git_.Run({"branch", "stable", id});
    return id;
  }

  std::optional<std::string> Head(std::string_view branch) const override {
    return git_.Resolve("refs/heads/" + std::string(branch));
  }

  void SetBranch(std::string_view branch, const std::string& id) override {
    git_.Run({"update-ref", "refs/heads/" + std::string(branch), id});
  }

  std::string CommitToMaster(const Snapshot& tree,
                             const CommitMeta& meta) override {
    WriteSources(central_, tree);
    git_.Run({"add", "-A", "--", "."});
    git_.Run({"commit", "-q", "--allow-empty", "--no-verify",
              "--author=" + AuthorArg(meta), "-F", "-"},
             meta.message.empty() ? std::string("(no message)") : meta.message);
    return *Head("master");
  }

  Snapshot Tree(const std::string& id) const override { return git_.Tree(id); }

  std::vector<CommitInfo> Log(std::string_view branch) const override {
    std::string raw =
        git_.Run({"log", "--first-parent", "--reverse",
                  "--format=%H%x00%P%x00%an%x00%B%x01",
                  "refs/heads/" + std::string(branch)});
    std::vector<CommitInfo> out;
    size_t pos = 0;
    while (pos < raw.size()) {
      size_t end = raw.find('\x01', pos);
      if (end == std::string::npos) break;
      std::string rec = raw.substr(pos, end - pos);
      pos = end + 1;
      while (!rec.empty() && rec.front() == '\n') rec.erase(0, 1);
      std::vector<std::string> f;
      size_t p = 0;
      for (int i = 0; i < 3; ++i) {
        size_t n = rec.find('\0', p);
        f.push_back(rec.substr(p, n - p));
        p = n + 1;
      }
      CommitInfo c;
      c.id = f[0];
      c.parent = f[1].substr(0, f[1].find(' '));
      c.meta.author = f[2];
      c.meta.message = rec.substr(p);
      Git::StripTrailingNewlines(c.meta.message);
      out.push_back(std::move(c));
    }
    return out;
  }

  bool IsAncestor(const std::string& ancestor,
                  const std::string& descendant) const override {
    ProcResult r = git_.Try({"merge-base", "--is-ancestor", ancestor,
                             descendant});
    if (r.status > 1) throw BackendError("merge-base failed: " + Trim(r.err));
    return r.status == 0;
  }

  void CreateTag(const std::string& name, const std::string& id) override {
    git_.Run({"tag", name, id});
  }

  std::vector<std::string> Tags() const override {
    std::vector<std::string> out;
    std::istringstream in(git_.Run({"tag", "--list"}));
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) out.push_back(line);
    std::sort(out.begin(), out.end());
    return out;
  }

  void CloneFrontend() override {
    std::error_code ec;
    fs::create_directories(frontend_path_.parent_path(), ec);
    Git parent(frontend_path_.parent_path().empty()
                   ? fs::current_path()
                   : frontend_path_.parent_path());
    parent.Run({"clone", "-q", "--bare", fs::absolute(central_).string(),
                fs::absolute(frontend_path_).string()});
    if (!hook_exe_.empty()) InstallFrontendHook();
  }

  // Builds a commit directly in the bare frontend, the equivalent of a
  // user's push that arrives without running any hook.
  void PushFrontend(const Snapshot& tree, const CommitMeta& meta) override {
    std::string listing;
    for (const auto& [name, bytes] : tree) {
      std::string oid =
          Trim(front_.Run({"hash-object", "-w", "--stdin"}, bytes));
      listing += "100644 blob " + oid + "\t" + name + '\0';
    }
    std::string tree_id = Trim(front_.Run({"mktree", "-z"}, listing));
    std::vector<std::string> args{"commit-tree", tree_id};
    if (auto head = front_.Resolve("refs/heads/master")) {
      args.push_back("-p");
      args.push_back(*head);
    }
    args.push_back("-F");
    args.push_back("-");
    // commit-tree takes the author from the environment only.
    std::string name = AuthorArg(meta);
    name = name.substr(0, name.find(" <"));
    std::vector<std::string> full{"-c", "user.name=" + name};
    full.insert(full.end(), args.begin(), args.end());
    std::string commit = Trim(front_.Run(
        full, meta.message.empty() ? std::string("(no message)")
                                   : meta.message));
    front_.Run({"update-ref", "refs/heads/master", commit});
  }

  Snapshot FrontendTree() const override {
    return front_.Tree("refs/heads/master");
  }

  CommitMeta FrontendHeadMeta() const override {
    return front_.Meta("refs/heads/master");
  }

  void ResetFrontend() override {
    front_.Run({"fetch", "-q", "--force", "--update-head-ok",
                fs::absolute(central_).string(), "master:master"});
  }

  Snapshot Staged() const override {
    return git_.Listing(git_.Run({"ls-files", "-s", "-z"}, {}, true), 1);
  }

  void InstallHooks(const fs::path& executable) override {
    hook_exe_ = executable;
    if (executable.empty()) return;
    fs::path hooks = central_ / ".git" / "hooks";
    std::string exe = ShellQuote(fs::absolute(executable).string());
    std::string repo = ShellQuote(fs::absolute(central_).string());
    WriteHook(hooks / "pre-commit",
              "exec " + exe + " hook pre-commit --repo " + repo + "\n");
    WriteHook(hooks / "post-commit",
              "exec " + exe + " hook post-commit --repo " + repo + "\n");
    std::error_code ec;
    if (fs::exists(frontend_path_ / "hooks", ec)) InstallFrontendHook();
  }

 private:
  void InstallFrontendHook() {
    std::string exe = ShellQuote(fs::absolute(hook_exe_).string());
    std::string repo = ShellQuote(fs::absolute(central_).string());
    WriteHook(frontend_path_ / "hooks" / "post-receive",
              "cat >/dev/null\nexec " + exe + " hook post-receive --repo " +
                  repo + "\n");
  }

  fs::path central_;
  fs::path frontend_path_;
  Git git_;
  Git front_;
  fs::path hook_exe_;
};

}  // namespace

bool GitAvailable() {
  try {
    return RunProcess({"git", "--version"}, fs::current_path(), {}).status == 0;
  } catch (const std::exception&) {
    return false;
  }
}

std::unique_ptr<VcsBackend> MakeGitBackend(const fs::path& central,
                                           const fs::path& frontend) {
  return std::make_unique<GitBackend>(central, frontend);
}

}  // namespace fwiki
