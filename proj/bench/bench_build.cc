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

// Parallel kernels against their serial references on generated libraries.

#include <benchmark/benchmark.h>

#include <random>

#include "corpus.h"
#include "fwiki/article.h"
#include "fwiki/depgraph.h"
#include "fwiki/sandbox.h"
#include "fwiki/verifier.h"
#include "pipeline.h"
#include "temp_dir.h"

namespace {

using namespace fwiki;

// A fully verified layered library kept alive for the whole process.
struct Corpus {
  fwiki_test::TempDir dir;
  Sandbox sandbox{dir.path(), SandboxRole::kDirty};
  DependencyGraph graph;
  BuildPlan plan;
  BuildState empty;

  explicit Corpus(int articles) {
    std::mt19937_64 rng(17);
    fwiki_test::GenOptions opt;
    opt.articles = articles;
    opt.layer_width = 20;
    opt.defs_per_article = 12;
    opt.thms_per_article = 12;
    auto staged = fwiki_test::StageSources(
        sandbox, fwiki_test::RandomLibrary(rng, opt).Sources());
    graph = staged.graph;
    plan = PlanBuild(graph, empty, ComputeDirty(graph, graph.nodes(), {}));
  }
};

Corpus& Shared() {
  static Corpus corpus(200);
  return corpus;
}

void BM_RunBuild(benchmark::State& state) {
  Corpus& c = Shared();
  int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(RunBuild(c.plan, c.graph, c.empty, workers, c.sandbox));
  state.SetItemsProcessed(state.iterations() * c.graph.nodes().size());
}
BENCHMARK(BM_RunBuild)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_RunBuildReference(benchmark::State& state) {
  Corpus& c = Shared();
  for (auto _ : state)
    benchmark::DoNotOptimize(RunBuildReference(c.plan, c.graph, c.empty, c.sandbox));
  state.SetItemsProcessed(state.iterations() * c.graph.nodes().size());
}
BENCHMARK(BM_RunBuildReference)->Unit(benchmark::kMillisecond);

void BM_DiffTreesWarm(benchmark::State& state) {
  Corpus& c = Shared();
  fwiki_test::TempDir other;
  Sandbox target(other.path(), SandboxRole::kClean);
  Sync(c.sandbox, target);
  Sync(c.sandbox, target);
  for (auto _ : state) benchmark::DoNotOptimize(DiffTrees(c.sandbox, target));
}
BENCHMARK(BM_DiffTreesWarm)->Unit(benchmark::kMillisecond);

void BM_TreeHash(benchmark::State& state) {
  Corpus& c = Shared();
  for (auto _ : state) benchmark::DoNotOptimize(TreeHash(c.sandbox));
}
BENCHMARK(BM_TreeHash)->Unit(benchmark::kMillisecond);

// Header extraction must not depend on body size.
void BM_ParseEnviron(benchmark::State& state) {
  std::string src = "article big\nenviron imports a, b, c;\nbegin\n";
  while (src.size() < static_cast<size_t>(state.range(0)))
    src += "thm t" + std::to_string(src.size()) + " : 1 < 2 by evaluation;\n";
  for (auto _ : state) benchmark::DoNotOptimize(ParseEnviron(src));
  state.SetLabel(std::to_string(src.size() / 1024) + " KiB body");
}
BENCHMARK(BM_ParseEnviron)->Arg(1 << 10)->Arg(10 << 20);

}  // namespace

BENCHMARK_MAIN();
