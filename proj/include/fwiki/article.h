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

#ifndef FWIKI_ARTICLE_H_
#define FWIKI_ARTICLE_H_

// The article language: a small verifiable stand-in for formal library
// articles. An article declares its imports, then lists definitions binding
// integer symbols and theorems relating integer expressions.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fwiki {

/// Article identifier, `[a-z][a-z0-9_]{0,63}`; also the source file stem.
class ArticleName {
 public:
  ArticleName() = default;
  /// Throws std::invalid_argument unless IsValid(name).
  explicit ArticleName(std::string name);

  static bool IsValid(std::string_view name);
  static std::optional<ArticleName> Parse(std::string_view name);

  const std::string& str() const { return name_; }
  std::string file_name() const { return name_ + ".fml"; }

  auto operator<=>(const ArticleName&) const = default;

 private:
  std::string name_;
};

inline constexpr std::string_view kSourceExtension = ".fml";
inline constexpr size_t kMaxArticleNameLength = 64;

/// 1-based source position.
struct Span {
  int line = 0;
  int column = 0;
  auto operator<=>(const Span&) const = default;
};

enum class BinaryOp { kAdd, kSub, kMul };

struct Expr {
  enum class Kind { kLiteral, kIdentifier, kBinary, kParen };

  Kind kind = Kind::kLiteral;
  std::int64_t value = 0;         // kLiteral
  std::string name;               // kIdentifier
  BinaryOp op = BinaryOp::kAdd;   // kBinary
  std::vector<Expr> operands;     // kBinary: lhs, rhs. kParen: inner.
  Span span;

  static Expr Literal(std::int64_t v, Span span = {});
  static Expr Identifier(std::string name, Span span = {});
  static Expr Binary(BinaryOp op, Expr lhs, Expr rhs, Span span = {});
  static Expr Paren(Expr inner, Span span = {});
};

enum class Relation { kEq, kLt, kLe };

/// Justification reference. No article means a label of the same article.
struct Ref {
  std::optional<ArticleName> article;
  std::string label;
  Span span;
};

struct Definition {
  std::string symbol;
  Span symbol_span;
  Expr body;
};

struct Theorem {
  Expr lhs;
  Relation relation = Relation::kEq;
  Expr rhs;
  bool by_evaluation = false;
  std::vector<Ref> refs;
};

struct Item {
  std::string label;
  Span span;
  std::variant<Definition, Theorem> content;

  bool is_definition() const {
    return std::holds_alternative<Definition>(content);
  }
  const Definition& definition() const { return std::get<Definition>(content); }
  const Theorem& theorem() const { return std::get<Theorem>(content); }
};

struct EnvironDecl {
  std::vector<ArticleName> imports;  // declaration order
  std::vector<Span> import_spans;
};

struct Article {
  ArticleName name;
  EnvironDecl environ;
  std::vector<Item> items;
};

enum class ParseErrorKind {
  kSyntax,
  kNameMismatch,
  kInvalidName,
  kDuplicateLabel,
  kDuplicateImport,
  kDuplicateSymbol,
  kSelfImport,
  kIntegerRange,
};

std::string_view ToString(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, Span span, std::string message);

  ParseErrorKind kind() const { return kind_; }
  Span span() const { return span_; }
  const std::string& message() const { return message_; }

 private:
  ParseErrorKind kind_;
  Span span_;
  std::string message_;
};

/// Parses a complete article. Throws ParseError; never anything else for
/// malformed input.
Article ParseArticle(std::string_view source, const ArticleName& expected_name);

struct ArticleHeader {
  ArticleName name;
  EnvironDecl environ;
};

/// Header-only pass; see ParseEnviron.
ArticleHeader ParseArticleHeader(std::string_view source);

/// Reads only the header through `begin` and returns its imports. The body
/// is never scanned, so cost is proportional to the header length.
EnvironDecl ParseEnviron(std::string_view source);

enum class EvalErrorKind { kUnboundIdentifier, kOverflow };

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, Span span, std::string name);

  EvalErrorKind kind() const { return kind_; }
  Span span() const { return span_; }
  const std::string& name() const { return name_; }

 private:
  EvalErrorKind kind_;
  Span span_;
  std::string name_;
};

/// Resolves an identifier node to its value, or nullopt if unbound.
using SymbolLookup = std::function<std::optional<std::int64_t>(const Expr&)>;

/// Checked 64-bit evaluation; overflow is an error, never wrap-around.
std::int64_t EvaluateExpr(const Expr& expr, const SymbolLookup& lookup);
std::int64_t EvaluateExpr(const Expr& expr,
                          const std::map<std::string, std::int64_t>& bindings);

bool Holds(Relation relation, std::int64_t lhs, std::int64_t rhs);

std::string_view ToString(Relation relation);
std::string FormatExpr(const Expr& expr);
/// Canonical statement text, e.g. "c * c = 4".
std::string FormatStatement(const Theorem& theorem);
/// Canonical source text. ParseArticle(FormatArticle(a)) reproduces a
/// up to spans.
std::string FormatArticle(const Article& article);

/// Calls |fn| on every identifier node of |expr| in source order.
void ForEachIdentifier(const Expr& expr,
                       const std::function<void(const Expr&)>& fn);

}  // namespace fwiki

#endif  // FWIKI_ARTICLE_H_
