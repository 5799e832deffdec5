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

#include "fwiki/repo.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fwiki {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

std::atomic<bool> g_publish_fault{false};

class PhaseTimer {
 public:
  explicit PhaseTimer(std::vector<std::pair<std::string, double>>* out)
      : out_(out), last_(Clock::now()) {}

  void Mark(const char* phase) {
    auto now = Clock::now();
    out_->emplace_back(phase,
                       std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>* out_;
  Clock::time_point last_;
};

std::string UtcNow() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void AppendLine(const fs::path& file, const std::string& line) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::app | std::ios::binary);
  out << line << "\n";
  if (!out) throw IoError("cannot append to " + file.string());
}

std::string StemOf(const std::string& path) {
  if (path.size() > kSourceExtension.size() &&
      path.compare(path.size() - kSourceExtension.size(),
                   kSourceExtension.size(), kSourceExtension) == 0)
    return path.substr(0, path.size() - kSourceExtension.size());
  return path;
}

Diagnostic Diag(std::string article, DiagKind kind, std::string message,
                Span span = {}) {
  return {std::move(article), span, kind, std::move(message)};
}

std::vector<Diagnostic> HeaderDiagnostics(const RefreshResult& refresh) {
  std::vector<Diagnostic> out;
  for (const auto& [file, error] : refresh.errors) {
    DiagKind kind = error.kind() == ParseErrorKind::kDuplicateLabel
                        ? DiagKind::kDuplicateLabel
                        : DiagKind::kSyntax;
    out.push_back(Diag(StemOf(file), kind, error.what(), error.span()));
  }
  return out;
}

std::vector<Diagnostic> GraphDiagnostics(const GraphError& error) {
  std::vector<Diagnostic> out;
  if (error.kind() == GraphError::Kind::kDangling) {
    for (const auto& [importer, missing] : error.dangling())
      out.push_back(Diag(importer.str(), DiagKind::kDanglingImport,
                         "'" + importer.str() + "' imports missing article '" +
                             missing.str() + "'"));
  } else {
    std::string path;
    for (const auto& a : error.cycle()) path += a.str() + " -> ";
    if (!error.cycle().empty()) path += error.cycle().front().str();
    out.push_back(Diag(error.cycle().empty() ? "" : error.cycle().front().str(),
                       DiagKind::kImportCycle, "import cycle " + path));
  }
  return out;
}

// Checks the parts of a request that need no repository state.
std::vector<Diagnostic> ValidateShape(const CommitRequest& request,
                                      const RepoConfig& config,
                                      bool allow_empty) {
  std::vector<Diagnostic> out;
  if (request.changes.size() > config.max_files)
    out.push_back(Diag("", DiagKind::kRequestTooLarge,
                       std::to_string(request.changes.size()) +
                           " files exceed the limit of " +
                           std::to_string(config.max_files)));
  std::uint64_t bytes = 0;
  for (const auto& c : request.changes) bytes += c.payload.size();
  if (bytes > config.max_bytes)
    out.push_back(Diag("", DiagKind::kRequestTooLarge,
                       std::to_string(bytes) + " payload bytes exceed the limit of " +
                           std::to_string(config.max_bytes)));
  if (request.changes.empty() && !allow_empty)
    out.push_back(Diag("", DiagKind::kInvalidRequest, "request has no changes"));
  std::set<std::string> seen;
  for (const auto& c : request.changes) {
    if (!IsSourcePath(c.path)) {
      out.push_back(Diag("", DiagKind::kIllegalPath,
                         "illegal path '" + c.path + "'"));
      continue;
    }
    if (!seen.insert(c.path).second)
      out.push_back(Diag(StemOf(c.path), DiagKind::kInvalidRequest,
                         "path '" + c.path + "' appears twice"));
    if (c.action == ChangeAction::kDelete && !c.payload.empty())
      out.push_back(Diag(StemOf(c.path), DiagKind::kInvalidRequest,
                         "delete of '" + c.path + "' carries a payload"));
  }
  return out;
}

// Checks actions against the library the request will be applied to.
std::vector<Diagnostic> ValidateActions(const CommitRequest& request,
                                        const fs::path& library) {
  std::vector<Diagnostic> out;
  for (const auto& c : request.changes) {
    std::error_code ec;
    bool exists = fs::exists(library / c.path, ec);
    if (c.action == ChangeAction::kAdd && exists)
      out.push_back(Diag(StemOf(c.path), DiagKind::kInvalidRequest,
                         "add of existing article '" + c.path + "'"));
    if (c.action != ChangeAction::kAdd && !exists)
      out.push_back(Diag(StemOf(c.path), DiagKind::kInvalidRequest,
                         "'" + c.path + "' does not exist"));
  }
  return out;
}

json NamesJson(const std::set<ArticleName>& names) {
  json a = json::array();
  for (const auto& n : names) a.push_back(n.str());
  return a;
}

json StatsJson(const SyncStats& s) {
  return {{"files_scanned", s.files_scanned},
          {"files_hashed", s.files_hashed},
          {"bytes_hashed", s.bytes_hashed},
          {"files_written", s.files_written},
          {"files_deleted", s.files_deleted},
          {"bytes_copied", s.bytes_copied},
          {"seconds", s.seconds}};
}

std::string JoinNames(const std::set<ArticleName>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n.str();
  return out.empty() ? "-" : out;
}

// Removes directories created by a failed init.
class CreatedDirs {
 public:
  void Create(const fs::path& dir) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
      if (!fs::is_directory(dir, ec) || !fs::is_empty(dir, ec))
        throw ConfigError(dir.string() + " exists and is not empty");
      return;
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string());
    dirs_.push_back(dir);
  }
  void Rollback() {
    std::error_code ec;
    for (const auto& d : dirs_) fs::remove_all(d, ec);
  }

 private:
  std::vector<fs::path> dirs_;
};

DirtySet DirtyFromRequest(const DependencyGraph& graph,
                          const CommitRequest& diff) {
  std::set<ArticleName> changed, deleted;
  for (const auto& c : diff.changes) {
    ArticleName a = *ArticleName::Parse(StemOf(c.path));
    (c.action == ChangeAction::kDelete ? deleted : changed).insert(a);
  }
  return ComputeDirty(graph, changed, deleted);
}

}  // namespace

SeedIncoherent::SeedIncoherent(std::vector<Diagnostic> diagnostics)
    : std::runtime_error("seed library does not verify"),
      diagnostics_(std::move(diagnostics)) {}

RepoLock::RepoLock(const fs::path& central) {
  fd_ = ::open((central / "gate.lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC,
               0644);
  if (fd_ < 0)
    throw IoError("cannot open lock file: " + std::string(std::strerror(errno)));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) throw LockBusy();
    throw IoError("cannot lock: " + std::string(std::strerror(err)));
  }
}

RepoLock::~RepoLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string CommitResult::ToJson(bool include_volatile) const {
  json diags = json::array();
  for (const auto& d : diagnostics)
    diags.push_back({{"article", d.article},
                     {"line", d.span.line},
                     {"column", d.span.column},
                     {"kind", std::string(fwiki::ToString(d.kind))},
                     {"message", d.message}});
  json j = {{"verdict", accepted ? "accepted" : "rejected"},
            {"diagnostics", diags},
            {"verified", NamesJson(verified)},
            {"cutoff", NamesJson(cutoff)},
            {"skipped", NamesJson(skipped)},
            {"verifications", verifications}};
  if (include_volatile) {
    j["commit_id"] = commit_id;
    json t = json::object();
    for (const auto& [phase, seconds] : timings) t[phase] = seconds;
    j["timings"] = t;
    j["sync"] = StatsJson(sync);
    j["promote"] = StatsJson(promote);
  }
  return j.dump(1) + "\n";
}

std::string CommitResult::ToText() const {
  std::ostringstream out;
  if (accepted)
    out << "ACCEPTED" << (commit_id.empty() ? "" : " " + commit_id) << "\n";
  else
    out << "REJECTED\n";
  out << "verified: " << JoinNames(verified) << "\n";
  out << "cutoff: " << JoinNames(cutoff) << "\n";
  if (!skipped.empty()) out << "skipped: " << JoinNames(skipped) << "\n";
  for (const auto& d : diagnostics) out << d.ToString() << "\n";
  return out.str();
}

std::string RepoStatus::ToJson() const {
  json j = {{"verdict", verdict == LibraryVerdict::kCoherent ? "Coherent"
                                                             : "Incoherent"},
            {"clean_valid", clean_valid},
            {"master", master},
            {"stable", stable},
            {"articles", articles}};
  if (!last_report.empty()) j["last_report"] = json::parse(last_report);
  return j.dump(1) + "\n";
}

std::string RepoStatus::ToText() const {
  std::ostringstream out;
  out << "library: "
      << (verdict == LibraryVerdict::kCoherent ? "Coherent" : "Incoherent")
      << (clean_valid ? "" : " (clean sandbox not marked valid)") << "\n"
      << "articles: " << articles << "\n"
      << "master: " << master << "\n"
      << "stable: " << stable << "\n";
  if (!last_report.empty()) out << "last gate report:\n" << last_report;
  return out.str();
}

CommitRequest DiffRequest(const Snapshot& from, const Snapshot& to,
                          CommitMeta meta) {
  CommitRequest r{std::move(meta.author), std::move(meta.message), {}};
  for (const auto& [name, bytes] : to) {
    auto it = from.find(name);
    if (it == from.end())
      r.changes.push_back({name, ChangeAction::kAdd, bytes});
    else if (it->second != bytes)
      r.changes.push_back({name, ChangeAction::kModify, bytes});
  }
  for (const auto& [name, bytes] : from)
    if (!to.count(name)) r.changes.push_back({name, ChangeAction::kDelete, {}});
  return r;
}

Snapshot ApplyRequest(Snapshot base, const CommitRequest& request) {
  for (const auto& c : request.changes) {
    if (!IsSourcePath(c.path)) continue;
    if (c.action == ChangeAction::kDelete)
      base.erase(c.path);
    else
      base[c.path] = c.payload;
  }
  return base;
}

void Repository::SetPublishFault(bool on) { g_publish_fault.store(on); }

Repository::Repository(RepoConfig config)
    : config_(std::move(config)),
      backend_(MakeBackend(config_.backend, config_.central,
                           config_.frontend)) {}

Repository::Repository(Repository&&) noexcept = default;
Repository& Repository::operator=(Repository&&) noexcept = default;
Repository::~Repository() = default;

Repository Repository::Open(const fs::path& central) {
  return Repository(LoadConfig(central));
}

Sandbox Repository::clean() const {
  return Sandbox(config_.central / "sandbox" / "clean", SandboxRole::kClean);
}
Sandbox Repository::dirty() const {
  return Sandbox(config_.central / "sandbox" / "dirty", SandboxRole::kDirty);
}
fs::path Repository::log_dir() const { return config_.central / "log"; }

std::string Repository::CleanHead() const {
  fs::path p = config_.central / "sandbox" / "clean_head";
  std::error_code ec;
  return fs::exists(p, ec) ? Trim(ReadFile(p)) : std::string();
}

void Repository::SetCleanHead(const std::string& id) const {
  fs::path p = config_.central / "sandbox" / "clean_head";
  if (id.empty()) {
    std::error_code ec;
    fs::remove(p, ec);
  } else {
    WriteFileAtomic(p, id + "\n");
  }
}

void Repository::Notify(const std::string& line) {
  AppendLine(log_dir() / "notify.log", UtcNow() + " " + line);
}

void Repository::LogGate(std::string_view mode, const CommitResult& r) {
  std::ostringstream line;
  line << UtcNow() << " " << mode << " "
       << (r.accepted ? "accepted" : "rejected") << " "
       << (r.commit_id.empty() ? "-" : r.commit_id)
       << " verified=" << r.verified.size() << " cutoff=" << r.cutoff.size()
       << " skipped=" << r.skipped.size()
       << " diagnostics=" << r.diagnostics.size();
  AppendLine(log_dir() / "gate.log", line.str());
  for (const auto& d : r.diagnostics)
    AppendLine(log_dir() / "gate.log", "  " + d.ToString());
  WriteFileAtomic(log_dir() / "last_report.json", r.ToJson());
}

InitResult Repository::Init(const InitOptions& options) {
  RepoConfig cfg = options.config;
  cfg.central = fs::absolute(cfg.central);
  cfg.frontend = fs::absolute(cfg.frontend);
  cfg.publish = fs::absolute(cfg.publish);
  if (!cfg.mirror.empty()) cfg.mirror = fs::absolute(cfg.mirror);
  cfg.Validate();

  Snapshot seed;
  if (!options.seed_dir.empty()) seed = ReadSources(options.seed_dir);

  CreatedDirs created;
  try {
    created.Create(cfg.central);
    created.Create(cfg.publish);
    std::error_code ec;
    if (fs::exists(cfg.frontend, ec) && !fs::is_empty(cfg.frontend, ec))
      throw ConfigError(cfg.frontend.string() + " exists and is not empty");

    Sandbox dirty(cfg.central / "sandbox" / "dirty", SandboxRole::kDirty);
    Sandbox clean(cfg.central / "sandbox" / "clean", SandboxRole::kClean);
    fs::create_directories(dirty.root());
    fs::create_directories(clean.root());
    fs::create_directories(cfg.central / "log");

    IndexedSink sink(dirty);
    for (const auto& [name, bytes] : seed) sink.Write(dirty.root() / name, bytes);
    RefreshResult refresh =
        RefreshManifests(dirty.root(), dirty.deps_dir(), sink);
    if (!refresh.errors.empty())
      throw SeedIncoherent(HeaderDiagnostics(refresh));
    DependencyGraph graph;
    try {
      graph = BuildGraph(LoadManifests(dirty.deps_dir()));
    } catch (const GraphError& e) {
      throw SeedIncoherent(GraphDiagnostics(e));
    }
    DirtySet all = ComputeDirty(graph, graph.nodes(), {});
    Admissibility adm = AdmissibilityCheck(graph, {}, all, cfg.workers, dirty);
    if (!adm.admissible) throw SeedIncoherent(adm.diagnostics);
    SaveBuildState(adm.outcome.state, dirty, sink);
    RenderIntoSandbox(dirty, adm.outcome.state, graph.nodes(), {}, sink);
    sink.Commit();
    Promote(dirty, clean);

    InitResult result;
    result.report = adm.outcome.report;
    result.token = options.token.empty() ? GenerateToken() : options.token;
    cfg.admin_token_hashes.insert(HashToken(result.token));
    SaveConfig(cfg);

    auto backend = MakeBackend(cfg.backend, cfg.central, cfg.frontend);
    result.commit_id =
        backend->Initialize(seed, {"fwiki", "Initial library"});
    backend->InstallHooks(options.hook_executable);
    backend->CloneFrontend();

    Repository repo = Open(cfg.central);
    repo.SetCleanHead(result.commit_id);
    repo.PublishDirty(result.commit_id, all);
    return result;
  } catch (...) {
    created.Rollback();
    std::error_code ec;
    fs::remove_all(cfg.frontend, ec);
    throw;
  }
}

CommitResult Repository::Pipeline(const CommitRequest& request, GateMode mode,
                                  DirtySet* dirty_out) {
  CommitResult res;
  PhaseTimer timer(&res.timings);
  const Sandbox clean_sb = clean();
  const Sandbox dirty_sb = dirty();

  RecoverSandbox(clean_sb);
  Sync(clean_sb, dirty_sb, &res.sync);
  timer.Mark("sync");

  auto reject = [&](std::vector<Diagnostic> diags) {
    res.accepted = false;
    res.diagnostics = std::move(diags);
    Sync(clean_sb, dirty_sb);
    timer.Mark("discard");
    return res;
  };

  IndexedSink sink(dirty_sb);
  try {
    Overlay(dirty_sb, request, sink);
  } catch (const IllegalPath& e) {
    return reject({Diag("", DiagKind::kIllegalPath, e.what())});
  }
  timer.Mark("overlay");

  RefreshResult refresh =
      RefreshManifests(dirty_sb.root(), dirty_sb.deps_dir(), sink);
  timer.Mark("refresh");
  if (!refresh.errors.empty()) return reject(HeaderDiagnostics(refresh));

  DependencyGraph graph;
  try {
    graph = BuildGraph(LoadManifests(dirty_sb.deps_dir()));
  } catch (const GraphError& e) {
    return reject(GraphDiagnostics(e));
  }
  std::set<ArticleName> changed, deleted;
  for (const auto& a : refresh.refreshed)
    (graph.contains(a) ? changed : deleted).insert(a);
  DirtySet dirty_set = ComputeDirty(graph, changed, deleted);
  timer.Mark("graph");

  BuildState prior = LoadBuildState(dirty_sb);
  Admissibility adm =
      AdmissibilityCheck(graph, prior, dirty_set, config_.workers, dirty_sb);
  timer.Mark("check");
  res.verified = adm.outcome.report.verified;
  res.cutoff = adm.outcome.report.cutoff;
  res.skipped = adm.outcome.report.skipped;
  res.verifications = adm.outcome.report.verifications;
  if (!adm.admissible) return reject(adm.diagnostics);

  SaveBuildState(adm.outcome.state, dirty_sb, sink);
  try {
    RenderIntoSandbox(dirty_sb, adm.outcome.state, dirty_set.influenced,
                      dirty_set.deleted, sink);
  } catch (const std::exception& e) {
    Notify(std::string("render failed: ") + e.what());
  }
  sink.Commit();
  timer.Mark("render");

  res.accepted = true;
  if (dirty_out) *dirty_out = dirty_set;
  if (mode == GateMode::kCheckOnly) return res;

  SetCleanHead({});
  Promote(dirty_sb, clean_sb, &res.promote);
  timer.Mark("promote");
  return res;
}

void Repository::Realign() {
  auto head = backend_->Head("master");
  if (!head) throw BackendError("central has no master branch");
  if (CleanHead() == *head) return;
  CommitRequest diff = DiffRequest(ReadSources(clean().root()),
                                   backend_->Tree(*head), {"fwiki", "realign"});
  DirtySet dirty_set;
  CommitResult r = Pipeline(diff, GateMode::kHeal, &dirty_set);
  if (!r.accepted) {
    std::string why;
    for (const auto& d : r.diagnostics) why += "\n  " + d.ToString();
    throw std::runtime_error("master " + *head + " does not verify:" + why);
  }
  SetCleanHead(*head);
  PublishDirty(*head, dirty_set);
}

CommitResult Repository::RunGate(const CommitRequest& request, GateMode mode) {
  RepoLock lock(config_.central);
  auto start = Clock::now();
  CommitResult res;
  std::string_view mode_name = mode == GateMode::kCheckOnly ? "pre-commit"
                               : mode == GateMode::kHeal    ? "heal"
                                                            : "commit";
  try {
    auto diags = ValidateShape(request, config_, mode == GateMode::kCheckOnly);
    if (diags.empty()) {
      Realign();
      diags = ValidateActions(request, clean().root());
    }
    if (!diags.empty()) {
      res.diagnostics = std::move(diags);
      LogGate(mode_name, res);
      return res;
    }

    DirtySet dirty_set;
    res = Pipeline(request, mode, &dirty_set);
    if (res.accepted && mode == GateMode::kCommit) {
      auto t0 = Clock::now();
      auto head = backend_->Head("master");
      Snapshot tree = ApplyRequest(backend_->Tree(*head), request);
      res.commit_id =
          backend_->CommitToMaster(tree, {request.author, request.message});
      SetCleanHead(res.commit_id);
      auto t1 = Clock::now();
      res.timings.emplace_back(
          "commit", std::chrono::duration<double>(t1 - t0).count());
      PublishDirty(res.commit_id, dirty_set);
      res.timings.emplace_back(
          "publish",
          std::chrono::duration<double>(Clock::now() - t1).count());
    }
  } catch (const LockBusy&) {
    throw;
  } catch (const std::exception& e) {
    try {
      RecoverSandbox(clean());
      Sync(clean(), dirty());
    } catch (const std::exception&) {
    }
    res.accepted = false;
    res.commit_id.clear();
    res.diagnostics = {Diag("", DiagKind::kInfrastructure, e.what())};
  }
  res.timings.emplace_back(
      "total", std::chrono::duration<double>(Clock::now() - start).count());
  LogGate(mode_name, res);
  return res;
}

CommitResult Repository::Submit(const CommitRequest& request) {
  // The frontend takes anything; a failed push there does not stop the gate.
  try {
    backend_->PushFrontend(ApplyRequest(backend_->FrontendTree(), request),
                           {request.author, request.message});
  } catch (const std::exception& e) {
    Notify(std::string("frontend push failed: ") + e.what());
  }
  CommitResult res = RunGate(request, GateMode::kCommit);
  try {
    backend_->ResetFrontend();
  } catch (const std::exception& e) {
    Notify(std::string("frontend reset failed: ") + e.what());
  }
  return res;
}

CommitResult Repository::HookPreCommit() {
  Snapshot staged = backend_->Staged();
  CommitRequest request =
      DiffRequest(ReadSources(clean().root()), staged, {"pre-commit", ""});
  return RunGate(request, GateMode::kCheckOnly);
}

CommitResult Repository::HookPostReceive() {
  CommitMeta meta = backend_->FrontendHeadMeta();
  auto head = backend_->Head("master");
  Snapshot master = head ? backend_->Tree(*head) : Snapshot{};
  CommitRequest request = DiffRequest(master, backend_->FrontendTree(), meta);
  CommitResult res = RunGate(request, GateMode::kCommit);
  try {
    backend_->ResetFrontend();
  } catch (const std::exception& e) {
    Notify(std::string("frontend reset failed: ") + e.what());
  }
  return res;
}

void Repository::HookPostCommit(const std::string& commit_id) {
  RepoLock lock(config_.central);
  std::string id = commit_id;
  if (id.empty()) id = backend_->Head("master").value_or("");
  if (id.empty()) throw BackendError("central has no master branch");

  std::vector<CommitInfo> log = backend_->Log("master");
  auto it = std::find_if(log.begin(), log.end(),
                         [&](const CommitInfo& c) { return c.id == id; });
  if (it == log.end()) throw BackendError("commit " + id + " is not on master");
  Snapshot tree = backend_->Tree(id);
  Snapshot parent = it->parent.empty() ? Snapshot{} : backend_->Tree(it->parent);

  if (CleanHead() != id) {
    bool promoted = false;
    // A pre-commit check leaves the admitted state in the dirty sandbox;
    // promote it when it is exactly this commit.
    if (ReadSources(dirty().root()) == tree) {
      try {
        BuildState st = LoadBuildState(dirty());
        bool matches = st.records.size() == tree.size();
        for (const auto& [name, bytes] : tree) {
          auto rec = st.records.find(*ArticleName::Parse(StemOf(name)));
          matches = matches && rec != st.records.end() &&
                    rec->second.source_hash == Sha256(bytes);
        }
        if (matches) {
          SetCleanHead({});
          Promote(dirty(), clean());
          promoted = true;
        }
      } catch (const std::exception&) {
        RecoverSandbox(clean());
      }
    }
    if (!promoted) {
      CommitRequest diff = DiffRequest(ReadSources(clean().root()), tree,
                                       {"fwiki", "post-commit"});
      CommitResult r = Pipeline(diff, GateMode::kHeal, nullptr);
      LogGate("post-commit", r);
      if (!r.accepted) {
        Notify("commit " + id + " does not verify; clean sandbox kept");
        return;
      }
    }
    SetCleanHead(id);
  }

  DependencyGraph graph;
  try {
    graph = BuildGraph(LoadManifests(clean().deps_dir()));
  } catch (const std::exception& e) {
    Notify("publish of " + id + " failed: " + e.what());
    return;
  }
  PublishDirty(id, DirtyFromRequest(graph, DiffRequest(parent, tree, {})));
}

void Repository::PublishDirty(const std::string& commit_id,
                              const DirtySet& dirty_set) {
  try {
    if (g_publish_fault.load()) throw std::runtime_error("injected fault");
    PublishResult r = Publish(dirty_set, clean(), config_.publish);
    std::string line = "published " + commit_id + " pages_written=" +
                       std::to_string(r.written.size()) + " pages_removed=" +
                       std::to_string(r.removed.size());
    if (!config_.mirror.empty()) {
      Snapshot site;
      for (const auto& f : ListFilesRecursive(config_.publish))
        site[f] = ReadFile(config_.publish / f);
      std::error_code ec;
      fs::create_directories(config_.mirror, ec);
      for (const auto& f : ListFilesRecursive(config_.mirror))
        if (!site.count(f)) fs::remove(config_.mirror / f, ec);
      for (const auto& [f, bytes] : site) {
        std::error_code e2;
        if (!fs::exists(config_.mirror / f, e2) ||
            ReadFile(config_.mirror / f) != bytes)
          WriteFileAtomic(config_.mirror / f, bytes);
      }
      line += " mirrored";
    }
    Notify(line);
  } catch (const std::exception& e) {
    Notify("publish of " + commit_id + " failed: " + e.what());
  }
}

std::string Repository::ReleaseStable(const std::string& token) {
  RepoLock lock(config_.central);
  if (!config_.IsAdmin(token)) throw AuthFailure();
  std::string master = backend_->Head("master").value_or("");
  std::string stable = backend_->Head("stable").value_or("");
  if (master == stable) throw NothingToRelease();
  if (!stable.empty() && !backend_->IsAncestor(stable, master))
    throw BackendError("stable is not an ancestor of master");
  int last = 0;
  for (const auto& tag : backend_->Tags()) {
    if (tag.rfind("release-", 0) != 0) continue;
    try {
      last = std::max(last, std::stoi(tag.substr(8)));
    } catch (const std::exception&) {
    }
  }
  backend_->SetBranch("stable", master);
  backend_->CreateTag("release-" + std::to_string(last + 1), master);
  Notify("released " + master + " as release-" + std::to_string(last + 1));
  return master;
}

RepoStatus Repository::Status() const {
  RepoStatus s;
  std::error_code ec;
  s.clean_valid = fs::exists(clean().valid_marker(), ec);
  BuildState st = LoadBuildState(clean());
  s.verdict = s.clean_valid ? st.verdict : LibraryVerdict::kIncoherent;
  s.articles = st.records.size();
  s.master = backend_->Head("master").value_or("");
  s.stable = backend_->Head("stable").value_or("");
  if (fs::exists(log_dir() / "last_report.json", ec))
    s.last_report = ReadFile(log_dir() / "last_report.json");
  return s;
}

BuildState Repository::VerifyIncremental() const {
  return LoadBuildState(clean());
}

BuildOutcome Repository::VerifyFull(const std::string& commit_id) const {
  std::string id = commit_id;
  if (id.empty()) id = backend_->Head("master").value_or("");
  Snapshot tree = id.empty() ? Snapshot{} : backend_->Tree(id);

  std::random_device rd;
  fs::path scratch = fs::temp_directory_path() /
                     ("fwiki-scratch-" + std::to_string(::getpid()) + "-" +
                      std::to_string(rd()));
  struct Remove {
    fs::path p;
    ~Remove() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } remover{scratch};
  fs::create_directories(scratch);
  for (const auto& [name, bytes] : tree) WriteFileAtomic(scratch / name, bytes);
  return VerifyFromScratch(scratch, config_.workers);
}

PublishResult Repository::Render(bool all) {
  RepoLock lock(config_.central);
  Realign();
  BuildState state = LoadBuildState(clean());
  DirtySet everything;
  for (const auto& [name, rec] : state.records) everything.influenced.insert(name);
  everything.changed = everything.influenced;
  std::error_code ec;
  if (fs::exists(config_.publish, ec)) {
    for (fs::directory_iterator it(config_.publish, ec), end; !ec && it != end;
         it.increment(ec)) {
      std::string f = it->path().filename().string();
      if (f == "index.html" || it->path().extension() != ".html") continue;
      std::string stem = it->path().stem().string();
      if (ArticleName::IsValid(stem) &&
          !state.records.count(*ArticleName::Parse(stem)))
        everything.deleted.insert(*ArticleName::Parse(stem));
    }
  }
  if (all) {
    IndexedSink sink(clean());
    RenderIntoSandbox(clean(), state, everything.influenced, {}, sink);
    sink.Commit();
  }
  return Publish(everything, clean(), config_.publish);
}

}  // namespace fwiki
