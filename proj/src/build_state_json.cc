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

#include <json.hpp>

#include "fwiki/verifier.h"

namespace fwiki {

using nlohmann::json;

namespace {

json EntryToJson(const ExportEntry& e) {
  json j;
  j["label"] = e.label;
  if (e.kind == ItemKind::kDefinition) {
    j["kind"] = "def";
    j["symbol"] = e.symbol;
    j["value"] = e.value;
  } else {
    j["kind"] = "thm";
    j["statement"] = e.statement;
  }
  return j;
}

Digest DigestFrom(const json& j) {
  auto d = Digest::FromHex(j.get<std::string>());
  if (!d) throw std::runtime_error("build state: malformed digest");
  return *d;
}

ArticleName NameFrom(const std::string& s) {
  auto n = ArticleName::Parse(s);
  if (!n) throw std::runtime_error("build state: bad article name '" + s + "'");
  return *n;
}

}  // namespace

std::string BuildState::ToJson() const {
  json recs = json::object();
  for (const auto& [name, r] : records) {
    json jr;
    jr["article"] = r.article.str();
    jr["source_hash"] = r.source_hash.hex();
    json sigs = json::object();
    for (const auto& [imp, h] : r.import_sigs) sigs[imp.str()] = h.hex();
    jr["import_sigs"] = std::move(sigs);
    json entries = json::array();
    for (const auto& e : r.exports.entries) entries.push_back(EntryToJson(e));
    jr["export"] = {{"entries", std::move(entries)},
                    {"sig_hash", r.exports.sig_hash.hex()}};
    jr["verdict"] = r.verdict == Verdict::kVerified ? "Verified" : "Failed";
    json diags = json::array();
    for (const auto& d : r.diagnostics) {
      diags.push_back({{"kind", std::string(fwiki::ToString(d.kind))},
                       {"line", d.span.line},
                       {"column", d.span.column},
                       {"message", d.message}});
    }
    jr["diagnostics"] = std::move(diags);
    recs[name.str()] = std::move(jr);
  }
  json root;
  root["library_verdict"] =
      verdict == LibraryVerdict::kCoherent ? "Coherent" : "Incoherent";
  root["records"] = std::move(recs);
  return root.dump(1) + "\n";
}

BuildState BuildState::FromJson(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("build state: ") + e.what());
  }
  try {
    BuildState st;
    st.verdict = root.at("library_verdict").get<std::string>() == "Coherent"
                     ? LibraryVerdict::kCoherent
                     : LibraryVerdict::kIncoherent;
    for (const auto& [key, jr] : root.at("records").items()) {
      BuildRecord r;
      r.article = NameFrom(jr.at("article").get<std::string>());
      r.source_hash = DigestFrom(jr.at("source_hash"));
      for (const auto& [imp, h] : jr.at("import_sigs").items())
        r.import_sigs[NameFrom(imp)] = DigestFrom(h);
      std::vector<ExportEntry> entries;
      for (const auto& je : jr.at("export").at("entries")) {
        ExportEntry e;
        e.label = je.at("label").get<std::string>();
        if (je.at("kind").get<std::string>() == "def") {
          e.kind = ItemKind::kDefinition;
          e.symbol = je.at("symbol").get<std::string>();
          e.value = je.at("value").get<std::int64_t>();
        } else {
          e.kind = ItemKind::kTheorem;
          e.statement = je.at("statement").get<std::string>();
        }
        entries.push_back(std::move(e));
      }
      r.exports.article = r.article;
      r.exports.entries = std::move(entries);
      r.exports.sig_hash = DigestFrom(jr.at("export").at("sig_hash"));
      r.verdict = jr.at("verdict").get<std::string>() == "Verified"
                      ? Verdict::kVerified
                      : Verdict::kFailed;
      for (const auto& jd : jr.at("diagnostics")) {
        Diagnostic d;
        d.article = r.article.str();
        auto kind = DiagKindFromString(jd.at("kind").get<std::string>());
        if (!kind) throw std::runtime_error("build state: unknown diagnostic");
        d.kind = *kind;
        d.span = {jd.at("line").get<int>(), jd.at("column").get<int>()};
        d.message = jd.at("message").get<std::string>();
        r.diagnostics.push_back(std::move(d));
      }
      if (r.article.str() != key)
        throw std::runtime_error("build state: record key mismatch");
      st.records.emplace(r.article, std::move(r));
    }
    return st;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("build state: ") + e.what());
  }
}

BuildState LoadBuildState(const Sandbox& sandbox) {
  std::error_code ec;
  if (!fs::exists(sandbox.state_file(), ec)) return {};
  return BuildState::FromJson(ReadFile(sandbox.state_file()));
}

void SaveBuildState(const BuildState& state, const Sandbox& sandbox,
                    FileSink& sink) {
  sink.Write(sandbox.state_file(), state.ToJson());
}

}  // namespace fwiki
