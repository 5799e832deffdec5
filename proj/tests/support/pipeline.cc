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

#include "pipeline.h"

#include <stdexcept>

namespace fwiki_test {

using namespace fwiki;

StagedBuild StageSources(const Sandbox& sandbox, const Snapshot& sources,
                         int workers) {
  fs::create_directories(sandbox.root());
  IndexedSink sink(sandbox);
  Snapshot current = ReadSources(sandbox.root());
  for (const auto& [path, bytes] : current)
    if (!sources.count(path)) sink.Remove(sandbox.root() / path);
  for (const auto& [path, bytes] : sources) {
    auto it = current.find(path);
    if (it == current.end() || it->second != bytes)
      sink.Write(sandbox.root() / path, bytes);
  }

  RefreshResult refresh =
      RefreshManifests(sandbox.root(), sandbox.deps_dir(), sink);
  if (!refresh.errors.empty())
    throw std::runtime_error("staged sources do not parse: " +
                             refresh.errors.begin()->first);
  StagedBuild out;
  out.graph = BuildGraph(LoadManifests(sandbox.deps_dir()));
  std::set<ArticleName> changed, deleted;
  for (const auto& a : refresh.refreshed)
    (out.graph.contains(a) ? changed : deleted).insert(a);
  out.dirty = ComputeDirty(out.graph, changed, deleted);
  out.adm = AdmissibilityCheck(out.graph, LoadBuildState(sandbox), out.dirty,
                               workers, sandbox);
  if (out.adm.admissible) {
    SaveBuildState(out.adm.outcome.state, sandbox, sink);
    RenderIntoSandbox(sandbox, out.adm.outcome.state, out.dirty.influenced,
                      out.dirty.deleted, sink);
  }
  sink.Commit();
  return out;
}

}  // namespace fwiki_test
