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

#ifndef FWIKI_VERIFIER_H_
#define FWIKI_VERIFIER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fwiki/article.h"
#include "fwiki/depgraph.h"
#include "fwiki/hash.h"
#include "fwiki/sandbox.h"

namespace fwiki {

enum class DiagKind {
  // Produced by article verification.
  kUnboundSymbol,
  kUnresolvedRef,
  kUndeclaredImportRef,
  kForwardRef,
  kFalseStatement,
  kDefCycle,
  kOverflow,
  kDuplicateLabel,
  kSyntax,
  // Produced by the gate.
  kDanglingImport,
  kImportCycle,
  kIllegalPath,
  kInvalidRequest,
  kRequestTooLarge,
  kInfrastructure,
};

std::string_view ToString(DiagKind kind);
std::optional<DiagKind> DiagKindFromString(std::string_view s);

struct Diagnostic {
  std::string article;
  Span span;
  DiagKind kind = DiagKind::kSyntax;
  std::string message;

  std::string ToString() const;
  bool operator==(const Diagnostic&) const = default;
};

enum class ItemKind { kDefinition, kTheorem };

/// One exported item. Definitions export their evaluated value; theorems
/// their canonical statement. Justifications are never part of the
/// interface.
struct ExportEntry {
  std::string label;
  ItemKind kind = ItemKind::kDefinition;
  std::string symbol;        // definitions
  std::int64_t value = 0;    // definitions
  std::string statement;     // theorems

  bool operator==(const ExportEntry&) const = default;
};

struct ExportSignature {
  ArticleName article;
  std::vector<ExportEntry> entries;  // sorted by label
  Digest sig_hash;

  /// Sorts |entries| and computes the hash.
  static ExportSignature Make(ArticleName article,
                              std::vector<ExportEntry> entries);

  const ExportEntry* FindLabel(std::string_view label) const;
  const ExportEntry* FindSymbol(std::string_view symbol) const;

  bool operator==(const ExportSignature&) const = default;
};

/// Canonical text the signature hash is computed over.
std::string CanonicalExportText(const std::vector<ExportEntry>& sorted_entries);

enum class Verdict { kVerified, kFailed };

struct BuildRecord {
  ArticleName article;
  Digest source_hash;
  std::map<ArticleName, Digest> import_sigs;
  ExportSignature exports;
  Verdict verdict = Verdict::kFailed;
  std::vector<Diagnostic> diagnostics;

  bool operator==(const BuildRecord&) const = default;
};

enum class LibraryVerdict { kCoherent, kIncoherent };

struct BuildState {
  std::map<ArticleName, BuildRecord> records;
  LibraryVerdict verdict = LibraryVerdict::kCoherent;

  /// Canonical JSON: sorted keys, lowercase hex, LF-terminated.
  std::string ToJson() const;
  /// Throws std::runtime_error on malformed input.
  static BuildState FromJson(std::string_view json);

  bool operator==(const BuildState&) const = default;
};

BuildState LoadBuildState(const Sandbox& sandbox);
void SaveBuildState(const BuildState& state, const Sandbox& sandbox,
                    FileSink& sink = DefaultSink());

/// Checks one article against the exports of its declared imports. Never
/// throws for bad content; problems come back as a Failed record carrying
/// every diagnostic found.
BuildRecord VerifyArticle(
    const Article& article, const Digest& source_hash,
    const std::map<ArticleName, ExportSignature>& import_exports);

/// Failed record for a source that does not parse.
BuildRecord ParseFailureRecord(const ArticleName& name,
                               const Digest& source_hash,
                               const ParseError& error);

/// True if |a|'s record is missing, failed, or out of date with respect to
/// its source digest or the current signatures of its imports.
bool IsStale(const ArticleName& a, const BuildState& state,
             const DependencyGraph& graph);

/// Coherent iff every article has a Verified, non-stale record and no
/// record outlives its article.
LibraryVerdict AssessCoherence(const BuildState& state,
                               const DependencyGraph& graph);

struct BuildPlan {
  Layers layers;                   // over dirty.influenced
  std::set<ArticleName> changed;   // always verified
  std::set<ArticleName> deleted;   // records dropped

  bool empty() const { return layers.empty() && deleted.empty(); }
};

BuildPlan PlanBuild(const DependencyGraph& graph, const BuildState& state,
                    const DirtySet& dirty);

struct BuildReport {
  std::set<ArticleName> verified;
  std::set<ArticleName> cutoff;    // influenced but not stale
  std::set<ArticleName> skipped;   // downstream of a failure
  std::set<ArticleName> failed;
  std::vector<Diagnostic> diagnostics;
  std::uint64_t verifications = 0;
};

struct BuildOutcome {
  BuildState state;
  BuildReport report;
};

/// Executes |plan| layer by layer, verifying up to |workers| articles of a
/// layer concurrently. Results are merged in name order on the calling
/// thread, so the outcome does not depend on |workers|.
BuildOutcome RunBuild(const BuildPlan& plan, const DependencyGraph& graph,
                      BuildState prior, int workers, const Sandbox& sandbox);

/// Single-threaded reference for RunBuild.
BuildOutcome RunBuildReference(const BuildPlan& plan,
                               const DependencyGraph& graph, BuildState prior,
                               const Sandbox& sandbox);

struct Admissibility {
  bool admissible = false;
  std::vector<Diagnostic> diagnostics;
  BuildOutcome outcome;
};

/// The gate verdict: deletions must leave no dangling import and the build
/// over the dirty set must end Coherent.
Admissibility AdmissibilityCheck(const DependencyGraph& graph,
                                 const BuildState& state,
                                 const DirtySet& dirty, int workers,
                                 const Sandbox& sandbox);

/// Verifies every article in |library_dir| ignoring any recorded state.
/// Throws ParseError/GraphError if the library does not even parse.
BuildOutcome VerifyFromScratch(const fs::path& library_dir, int workers);

}  // namespace fwiki

#endif  // FWIKI_VERIFIER_H_
