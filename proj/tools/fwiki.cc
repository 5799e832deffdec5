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

// fwiki command-line front end.
//
// Exit codes: 0 success or admissible, 1 rejected or inadmissible,
// 2 usage error, 3 infrastructure failure.

#include <unistd.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fwiki/repo.h"

namespace {

constexpr int kOk = 0;
constexpr int kRejected = 1;
constexpr int kUsage = 2;
constexpr int kInfrastructure = 3;

fwiki::fs::path SelfExecutable() {
  std::error_code ec;
  auto p = fwiki::fs::read_symlink("/proc/self/exe", ec);
  return ec ? fwiki::fs::path() : p;
}

int Report(const fwiki::CommitResult& r, bool as_json) {
  std::cerr << r.ToText();
  if (as_json) std::cout << r.ToJson();
  return r.accepted ? kOk : kRejected;
}

std::string SourceName(const std::string& arg) {
  std::string name = fwiki::fs::path(arg).filename().string();
  if (name.size() < 4 || name.compare(name.size() - 4, 4, ".fml") != 0)
    name += ".fml";
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fwiki: a verified formal wiki"};
  app.require_subcommand(1);

  // init
  auto* init = app.add_subcommand("init", "create central, frontend and publish");
  fwiki::RepoConfig init_cfg;
  std::string central, frontend, publish, seed, backend = "plain", token,
                                              mirror;
  init->add_option("--central", central)->required();
  init->add_option("--frontend", frontend)->required();
  init->add_option("--publish", publish)->required();
  init->add_option("--workers", init_cfg.workers)->check(CLI::PositiveNumber);
  init->add_option("--max-files", init_cfg.max_files);
  init->add_option("--max-bytes", init_cfg.max_bytes);
  init->add_option("--mirror", mirror);
  init->add_option("--backend", backend)
      ->check(CLI::IsMember({"plain", "git"}));
  init->add_option("--token", token, "admin token (generated when omitted)");
  init->add_option("SEED_DIR", seed);

  // submit
  auto* submit = app.add_subcommand("submit", "push a change through the gate");
  std::string repo, author, message;
  std::vector<std::string> adds, modifies, deletes;
  bool as_json = false;
  submit->add_option("--repo", repo)->required();
  submit->add_option("--author", author)->required();
  submit->add_option("-m,--message", message)->required();
  submit->add_option("--add", adds);
  submit->add_option("--modify", modifies);
  submit->add_option("--delete", deletes);
  submit->add_flag("--json", as_json);

  auto* verify = app.add_subcommand("verify", "print the library build state");
  bool full = false;
  verify->add_option("--repo", repo)->required();
  verify->add_flag("--full", full, "verify master from scratch");

  auto* release = app.add_subcommand("release", "fast-forward stable to master");
  release->add_option("--repo", repo)->required();
  release->add_option("--token", token)->required();

  auto* status = app.add_subcommand("status", "coherence, heads, last report");
  status->add_option("--repo", repo)->required();
  status->add_flag("--json", as_json);

  auto* render = app.add_subcommand("render", "publish HTML");
  bool render_all = false;
  render->add_option("--repo", repo)->required();
  render->add_flag("--all", render_all, "re-render every page");

  auto* hook = app.add_subcommand("hook", "version-control hook entry points");
  std::string hook_name, commit_id;
  hook->add_option("HOOK", hook_name)
      ->required()
      ->check(CLI::IsMember({"pre-commit", "post-receive", "post-commit"}));
  hook->add_option("--repo", repo)->required();
  hook->add_option("--commit", commit_id, "post-commit: commit to publish");
  hook->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*init) {
      fwiki::InitOptions opt;
      opt.config = init_cfg;
      opt.config.central = central;
      opt.config.frontend = frontend;
      opt.config.publish = publish;
      opt.config.mirror = mirror;
      opt.config.backend = backend == "git" ? fwiki::BackendKind::kExternalDvcs
                                            : fwiki::BackendKind::kPlainDir;
      opt.seed_dir = seed;
      opt.token = token;
      opt.hook_executable = SelfExecutable();
      try {
        fwiki::InitResult r = fwiki::Repository::Init(opt);
        std::cout << "master " << r.commit_id << "\n"
                  << "verified " << r.report.verified.size() << " articles\n"
                  << "admin token " << r.token << "\n";
      } catch (const fwiki::SeedIncoherent& e) {
        std::cerr << e.what() << "\n";
        for (const auto& d : e.diagnostics()) std::cerr << d.ToString() << "\n";
        return kRejected;
      }
      return kOk;
    }

    fwiki::Repository r = fwiki::Repository::Open(repo);
    if (*submit) {
      fwiki::CommitRequest req{author, message, {}};
      auto read = [&](const std::string& f, fwiki::ChangeAction action) {
        req.changes.push_back({fwiki::fs::path(f).filename().string(), action,
                               fwiki::ReadFile(f)});
      };
      for (const auto& f : adds) read(f, fwiki::ChangeAction::kAdd);
      for (const auto& f : modifies) read(f, fwiki::ChangeAction::kModify);
      for (const auto& d : deletes)
        req.changes.push_back({SourceName(d), fwiki::ChangeAction::kDelete, {}});
      return Report(r.Submit(req), as_json);
    }
    if (*verify) {
      fwiki::BuildState st =
          full ? r.VerifyFull().state : r.VerifyIncremental();
      std::cout << st.ToJson();
      return st.verdict == fwiki::LibraryVerdict::kCoherent ? kOk : kRejected;
    }
    if (*release) {
      try {
        std::cout << r.ReleaseStable(token) << "\n";
      } catch (const fwiki::AuthFailure& e) {
        std::cerr << e.what() << "\n";
        return kRejected;
      } catch (const fwiki::NothingToRelease& e) {
        std::cerr << e.what() << "\n";
        return kRejected;
      }
      return kOk;
    }
    if (*status) {
      fwiki::RepoStatus s = r.Status();
      std::cout << (as_json ? s.ToJson() : s.ToText());
      return kOk;
    }
    if (*render) {
      fwiki::PublishResult p = r.Render(render_all);
      std::cout << "written " << p.written.size() << " removed "
                << p.removed.size() << "\n";
      return kOk;
    }
    if (*hook) {
      if (hook_name == "pre-commit") return Report(r.HookPreCommit(), as_json);
      if (hook_name == "post-receive")
        return Report(r.HookPostReceive(), as_json);
      r.HookPostCommit(commit_id);
      return kOk;
    }
  } catch (const fwiki::LockBusy& e) {
    std::cerr << "fwiki: " << e.what() << "\n";
    return kInfrastructure;
  } catch (const std::exception& e) {
    std::cerr << "fwiki: " << e.what() << "\n";
    return kInfrastructure;
  }
  return kUsage;
}
