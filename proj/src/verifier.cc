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

#include "fwiki/verifier.h"

#include <omp.h>

#include <algorithm>
#include <array>
#include <exception>
#include <utility>

namespace fwiki {

namespace {

constexpr std::array<std::pair<DiagKind, std::string_view>, 15> kDiagNames = {{
    {DiagKind::kUnboundSymbol, "UnboundSymbol"},
    {DiagKind::kUnresolvedRef, "UnresolvedRef"},
    {DiagKind::kUndeclaredImportRef, "UndeclaredImportRef"},
    {DiagKind::kForwardRef, "ForwardRef"},
    {DiagKind::kFalseStatement, "FalseStatement"},
    {DiagKind::kDefCycle, "DefCycle"},
    {DiagKind::kOverflow, "Overflow"},
    {DiagKind::kDuplicateLabel, "DuplicateLabel"},
    {DiagKind::kSyntax, "Syntax"},
    {DiagKind::kDanglingImport, "DanglingImport"},
    {DiagKind::kImportCycle, "ImportCycle"},
    {DiagKind::kIllegalPath, "IllegalPath"},
    {DiagKind::kInvalidRequest, "InvalidRequest"},
    {DiagKind::kRequestTooLarge, "RequestTooLarge"},
    {DiagKind::kInfrastructure, "Infrastructure"},
}};

}  // namespace

std::string_view ToString(DiagKind kind) {
  for (const auto& [k, name] : kDiagNames)
    if (k == kind) return name;
  return "?";
}

std::optional<DiagKind> DiagKindFromString(std::string_view s) {
  for (const auto& [k, name] : kDiagNames)
    if (name == s) return k;
  return std::nullopt;
}

std::string Diagnostic::ToString() const {
  std::string out = article.empty() ? std::string("<request>") : article;
  if (span.line > 0)
    out += ":" + std::to_string(span.line) + ":" + std::to_string(span.column);
  out += ": ";
  out += fwiki::ToString(kind);
  out += ": " + message;
  return out;
}

std::string CanonicalExportText(const std::vector<ExportEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    if (e.kind == ItemKind::kDefinition) {
      out += "def " + e.label + " " + e.symbol + " " + std::to_string(e.value);
    } else {
      out += "thm " + e.label + " " + e.statement;
    }
    out += '\n';
  }
  return out;
}

ExportSignature ExportSignature::Make(ArticleName article,
                                      std::vector<ExportEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.label < b.label; });
  ExportSignature sig;
  sig.article = std::move(article);
  sig.entries = std::move(entries);
  sig.sig_hash = Sha256(CanonicalExportText(sig.entries));
  return sig;
}

const ExportEntry* ExportSignature::FindLabel(std::string_view label) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), label,
      [](const ExportEntry& e, std::string_view l) { return e.label < l; });
  if (it == entries.end() || it->label != label) return nullptr;
  return &*it;
}

const ExportEntry* ExportSignature::FindSymbol(std::string_view symbol) const {
  for (const auto& e : entries)
    if (e.kind == ItemKind::kDefinition && e.symbol == symbol) return &e;
  return nullptr;
}

namespace {

// Per-article verification state. Items are visited in source order;
// |position| is the index of the item being checked.
class ArticleChecker {
 public:
  ArticleChecker(const Article& article,
                 const std::map<ArticleName, ExportSignature>& imports)
      : article_(article), imports_(imports) {
    for (size_t i = 0; i < article.items.size(); ++i) {
      const Item& item = article.items[i];
      label_index_[item.label] = i;
      if (item.is_definition()) symbol_index_[item.definition().symbol] = i;
    }
  }

  void CheckImports() {
    const auto& env = article_.environ;
    for (size_t i = 0; i < env.imports.size(); ++i) {
      if (!imports_.count(env.imports[i])) {
        Report(env.import_spans.size() > i ? env.import_spans[i] : Span{1, 1},
               DiagKind::kUnresolvedRef,
               "import '" + env.imports[i].str() + "' has no verified export");
      }
    }
  }

  void Run() {
    for (size_t i = 0; i < article_.items.size(); ++i) {
      const Item& item = article_.items[i];
      if (item.is_definition()) {
        CheckDefinition(i, item);
      } else {
        CheckTheorem(i, item);
      }
    }
  }

  std::vector<Diagnostic> TakeDiagnostics() { return std::move(diags_); }
  std::vector<ExportEntry> TakeExports() { return std::move(exports_); }

 private:
  struct Binding {
    bool known = false;  // false when the defining item itself failed
    std::int64_t value = 0;
  };

  void Report(Span span, DiagKind kind, std::string message) {
    diags_.push_back({article_.name.str(), span, kind, std::move(message)});
  }

  // Resolves |id| as seen from item |position|: own earlier definitions
  // first, then imports in declared order. Returns nullopt after reporting
  // when unresolvable; a Binding with known=false when it resolves to a
  // definition that failed.
  std::optional<Binding> Resolve(const Expr& id, size_t position,
                                 const std::string* own_symbol) {
    if (auto it = symbol_index_.find(id.name);
        it != symbol_index_.end() && it->second < position) {
      auto b = own_values_.find(id.name);
      if (b == own_values_.end()) return Binding{};
      return Binding{true, b->second};
    }
    for (const auto& imp : article_.environ.imports) {
      auto sig = imports_.find(imp);
      if (sig == imports_.end()) continue;
      if (const ExportEntry* e = sig->second.FindSymbol(id.name))
        return Binding{true, e->value};
    }
    if (own_symbol && *own_symbol == id.name) {
      Report(id.span, DiagKind::kDefCycle,
             "definition of '" + id.name + "' refers to itself");
    } else if (symbol_index_.count(id.name)) {
      Report(id.span, DiagKind::kForwardRef,
             "'" + id.name + "' is defined later in this article");
    } else {
      Report(id.span, DiagKind::kUnboundSymbol,
             "unbound symbol '" + id.name + "'");
    }
    return std::nullopt;
  }

  // Resolves every identifier of |expr|, then evaluates if all are known.
  std::optional<std::int64_t> Evaluate(const Expr& expr, size_t position,
                                       const std::string* own_symbol) {
    std::map<const Expr*, Binding> bound;
    bool complete = true;
    ForEachIdentifier(expr, [&](const Expr& id) {
      auto b = Resolve(id, position, own_symbol);
      if (!b || !b->known) {
        complete = false;
        return;
      }
      bound[&id] = *b;
    });
    if (!complete) return std::nullopt;
    try {
      return EvaluateExpr(expr, [&](const Expr& id) -> std::optional<std::int64_t> {
        auto it = bound.find(&id);
        if (it == bound.end()) return std::nullopt;
        return it->second.value;
      });
    } catch (const EvalError& e) {
      Report(e.span(), e.kind() == EvalErrorKind::kOverflow
                           ? DiagKind::kOverflow
                           : DiagKind::kUnboundSymbol,
             e.what());
      return std::nullopt;
    }
  }

  void CheckDefinition(size_t position, const Item& item) {
    const Definition& def = item.definition();
    auto value = Evaluate(def.body, position, &def.symbol);
    if (!value) return;
    own_values_[def.symbol] = *value;
    ExportEntry e;
    e.label = item.label;
    e.kind = ItemKind::kDefinition;
    e.symbol = def.symbol;
    e.value = *value;
    exports_.push_back(std::move(e));
  }

  void CheckRef(size_t position, const Ref& ref) {
    if (!ref.article) {
      auto it = label_index_.find(ref.label);
      if (it == label_index_.end()) {
        Report(ref.span, DiagKind::kUnresolvedRef,
               "no item labelled '" + ref.label + "' in this article");
      } else if (it->second >= position) {
        Report(ref.span, DiagKind::kForwardRef,
               "'" + ref.label + "' does not precede its citation");
      }
      return;
    }
    const auto& env = article_.environ.imports;
    if (std::find(env.begin(), env.end(), *ref.article) == env.end()) {
      Report(ref.span, DiagKind::kUndeclaredImportRef,
             "'" + ref.article->str() + "' is not imported");
      return;
    }
    auto sig = imports_.find(*ref.article);
    if (sig == imports_.end() || !sig->second.FindLabel(ref.label)) {
      Report(ref.span, DiagKind::kUnresolvedRef,
             "'" + ref.article->str() + "' exports no item labelled '" +
                 ref.label + "'");
    }
  }

  void CheckTheorem(size_t position, const Item& item) {
    const Theorem& thm = item.theorem();
    for (const Ref& ref : thm.refs) CheckRef(position, ref);
    auto lhs = Evaluate(thm.lhs, position, nullptr);
    auto rhs = Evaluate(thm.rhs, position, nullptr);
    std::string statement = FormatStatement(thm);
    if (lhs && rhs && !Holds(thm.relation, *lhs, *rhs)) {
      Report(item.span, DiagKind::kFalseStatement,
             "theorem '" + item.label + "' is false: '" + statement +
                 "' evaluates to " + std::to_string(*lhs) + " " +
                 std::string(ToString(thm.relation)) + " " +
                 std::to_string(*rhs));
    }
    ExportEntry e;
    e.label = item.label;
    e.kind = ItemKind::kTheorem;
    e.statement = std::move(statement);
    exports_.push_back(std::move(e));
  }

  const Article& article_;
  const std::map<ArticleName, ExportSignature>& imports_;
  std::map<std::string, size_t> label_index_;
  std::map<std::string, size_t> symbol_index_;
  std::map<std::string, std::int64_t> own_values_;
  std::vector<ExportEntry> exports_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

BuildRecord VerifyArticle(
    const Article& article, const Digest& source_hash,
    const std::map<ArticleName, ExportSignature>& import_exports) {
  ArticleChecker checker(article, import_exports);
  checker.CheckImports();
  checker.Run();

  BuildRecord rec;
  rec.article = article.name;
  rec.source_hash = source_hash;
  for (const auto& imp : article.environ.imports) {
    if (auto it = import_exports.find(imp); it != import_exports.end())
      rec.import_sigs[imp] = it->second.sig_hash;
  }
  rec.diagnostics = checker.TakeDiagnostics();
  if (rec.diagnostics.empty()) {
    rec.verdict = Verdict::kVerified;
    rec.exports = ExportSignature::Make(article.name, checker.TakeExports());
  } else {
    rec.verdict = Verdict::kFailed;
    rec.exports = ExportSignature::Make(article.name, {});
  }
  return rec;
}

BuildRecord ParseFailureRecord(const ArticleName& name,
                               const Digest& source_hash,
                               const ParseError& error) {
  BuildRecord rec;
  rec.article = name;
  rec.source_hash = source_hash;
  rec.exports = ExportSignature::Make(name, {});
  rec.verdict = Verdict::kFailed;
  DiagKind kind = error.kind() == ParseErrorKind::kDuplicateLabel
                      ? DiagKind::kDuplicateLabel
                      : DiagKind::kSyntax;
  std::string msg = error.message();
  if (kind == DiagKind::kSyntax && error.kind() != ParseErrorKind::kSyntax)
    msg = std::string(ToString(error.kind())) + ": " + msg;
  rec.diagnostics.push_back({name.str(), error.span(), kind, std::move(msg)});
  return rec;
}

bool IsStale(const ArticleName& a, const BuildState& state,
             const DependencyGraph& graph) {
  auto it = state.records.find(a);
  if (it == state.records.end()) return true;
  const BuildRecord& rec = it->second;
  if (rec.verdict != Verdict::kVerified) return true;
  if (rec.source_hash != graph.source_hash(a)) return true;
  const auto& imports = graph.imports(a);
  if (rec.import_sigs.size() != imports.size()) return true;
  for (const auto& imp : imports) {
    auto sig = rec.import_sigs.find(imp);
    if (sig == rec.import_sigs.end()) return true;
    auto dep = state.records.find(imp);
    if (dep == state.records.end() ||
        dep->second.verdict != Verdict::kVerified ||
        dep->second.exports.sig_hash != sig->second)
      return true;
  }
  return false;
}

LibraryVerdict AssessCoherence(const BuildState& state,
                               const DependencyGraph& graph) {
  if (state.records.size() != graph.nodes().size())
    return LibraryVerdict::kIncoherent;
  for (const auto& a : graph.nodes()) {
    if (IsStale(a, state, graph)) return LibraryVerdict::kIncoherent;
  }
  return LibraryVerdict::kCoherent;
}

BuildPlan PlanBuild(const DependencyGraph& graph, const BuildState& state,
                    const DirtySet& dirty) {
  (void)state;  // staleness is decided during execution (early cutoff)
  BuildPlan plan;
  std::set<ArticleName> present;
  for (const auto& a : dirty.influenced)
    if (graph.contains(a)) present.insert(a);
  plan.layers = TopoOrder(graph, present);
  for (const auto& a : dirty.changed)
    if (graph.contains(a)) plan.changed.insert(a);
  plan.deleted = dirty.deleted;
  return plan;
}

namespace {

std::map<ArticleName, ExportSignature> ImportSnapshot(
    const ArticleName& a, const BuildState& state,
    const DependencyGraph& graph) {
  std::map<ArticleName, ExportSignature> out;
  for (const auto& imp : graph.imports(a)) {
    auto it = state.records.find(imp);
    if (it != state.records.end() && it->second.verdict == Verdict::kVerified)
      out.emplace(imp, it->second.exports);
  }
  return out;
}

BuildRecord VerifyFromSource(
    const ArticleName& name, const Sandbox& sandbox,
    const std::map<ArticleName, ExportSignature>& imports) {
  std::string source = ReadFile(sandbox.root() / name.file_name());
  Digest hash = Sha256(source);
  try {
    Article article = ParseArticle(source, name);
    return VerifyArticle(article, hash, imports);
  } catch (const ParseError& e) {
    return ParseFailureRecord(name, hash, e);
  }
}

enum class Decision { kVerify, kCutoff, kSkip };

Decision Decide(const ArticleName& a, const BuildPlan& plan,
                const BuildState& state, const DependencyGraph& graph,
                const std::set<ArticleName>& blocked) {
  for (const auto& imp : graph.imports(a))
    if (blocked.count(imp)) return Decision::kSkip;
  if (plan.changed.count(a) || IsStale(a, state, graph)) return Decision::kVerify;
  return Decision::kCutoff;
}

void Merge(BuildRecord rec, BuildOutcome& out, std::set<ArticleName>& blocked) {
  ArticleName a = rec.article;
  out.report.verified.insert(a);
  ++out.report.verifications;
  if (rec.verdict == Verdict::kFailed) {
    out.report.failed.insert(a);
    blocked.insert(a);
    for (const auto& d : rec.diagnostics) out.report.diagnostics.push_back(d);
  }
  out.state.records[a] = std::move(rec);
}

void Finish(const DependencyGraph& graph, BuildOutcome& out) {
  out.state.verdict = out.report.failed.empty() && out.report.skipped.empty()
                          ? AssessCoherence(out.state, graph)
                          : LibraryVerdict::kIncoherent;
}

}  // namespace

BuildOutcome RunBuild(const BuildPlan& plan, const DependencyGraph& graph,
                      BuildState prior, int workers, const Sandbox& sandbox) {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  BuildOutcome out;
  out.state = std::move(prior);
  for (const auto& d : plan.deleted) out.state.records.erase(d);

  std::set<ArticleName> blocked;
  for (const auto& layer : plan.layers) {
    std::vector<ArticleName> todo;
    for (const auto& a : layer) {
      switch (Decide(a, plan, out.state, graph, blocked)) {
        case Decision::kVerify: todo.push_back(a); break;
        case Decision::kCutoff: out.report.cutoff.insert(a); break;
        case Decision::kSkip:
          out.report.skipped.insert(a);
          blocked.insert(a);
          break;
      }
    }
    std::vector<std::map<ArticleName, ExportSignature>> inputs;
    inputs.reserve(todo.size());
    for (const auto& a : todo) inputs.push_back(ImportSnapshot(a, out.state, graph));

    std::vector<BuildRecord> results(todo.size());
    std::vector<std::exception_ptr> errors(todo.size());
    const long n = static_cast<long>(todo.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
      try {
        results[i] = VerifyFromSource(todo[i], sandbox, inputs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& rec : results) Merge(std::move(rec), out, blocked);
  }
  Finish(graph, out);
  return out;
}

BuildOutcome RunBuildReference(const BuildPlan& plan,
                               const DependencyGraph& graph, BuildState prior,
                               const Sandbox& sandbox) {
  BuildOutcome out;
  out.state = std::move(prior);
  for (const auto& d : plan.deleted) out.state.records.erase(d);
  std::set<ArticleName> blocked;
  for (const auto& layer : plan.layers) {
    for (const auto& a : layer) {
      switch (Decide(a, plan, out.state, graph, blocked)) {
        case Decision::kVerify:
          Merge(VerifyFromSource(a, sandbox, ImportSnapshot(a, out.state, graph)),
                out, blocked);
          break;
        case Decision::kCutoff:
          out.report.cutoff.insert(a);
          break;
        case Decision::kSkip:
          out.report.skipped.insert(a);
          blocked.insert(a);
          break;
      }
    }
  }
  Finish(graph, out);
  return out;
}

Admissibility AdmissibilityCheck(const DependencyGraph& graph,
                                 const BuildState& state,
                                 const DirtySet& dirty, int workers,
                                 const Sandbox& sandbox) {
  Admissibility result;
  for (const auto& d : dirty.deleted) {
    for (const auto& importer : graph.dependents(d)) {
      if (dirty.deleted.count(importer)) continue;
      result.diagnostics.push_back(
          {importer.str(), {}, DiagKind::kDanglingImport,
           "'" + importer.str() + "' imports deleted article '" + d.str() + "'"});
    }
  }
  if (!result.diagnostics.empty()) {
    result.outcome.state = state;
    result.outcome.state.verdict = LibraryVerdict::kIncoherent;
    return result;
  }
  result.outcome = RunBuild(PlanBuild(graph, state, dirty), graph, state,
                            workers, sandbox);
  result.diagnostics = result.outcome.report.diagnostics;
  result.admissible = result.outcome.state.verdict == LibraryVerdict::kCoherent;
  if (!result.admissible && result.diagnostics.empty()) {
    result.diagnostics.push_back({"", {}, DiagKind::kInfrastructure,
                                  "build state is stale after the build"});
  }
  return result;
}

BuildOutcome VerifyFromScratch(const fs::path& library_dir, int workers) {
  std::vector<DepManifest> manifests;
  std::error_code ec;
  for (fs::directory_iterator it(library_dir, ec), end; !ec && it != end;
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == kSourceExtension)
      manifests.push_back(ExtractDeps(it->path()));
  }
  if (ec) throw IoError("cannot list " + library_dir.string());
  DependencyGraph graph = BuildGraph(manifests);
  DirtySet all = ComputeDirty(graph, graph.nodes(), {});
  return RunBuild(PlanBuild(graph, {}, all), graph, {}, workers,
                  Sandbox(library_dir, SandboxRole::kDirty));
}

}  // namespace fwiki
