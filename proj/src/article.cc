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

#include "fwiki/article.h"

#include <array>
#include <charconv>
#include <limits>
#include <set>
#include <utility>

namespace fwiki {

ArticleName::ArticleName(std::string name) : name_(std::move(name)) {
  if (!IsValid(name_))
    throw std::invalid_argument("invalid article name '" + name_ + "'");
}

bool ArticleName::IsValid(std::string_view name) {
  if (name.empty() || name.size() > kMaxArticleNameLength) return false;
  if (name[0] < 'a' || name[0] > 'z') return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::optional<ArticleName> ArticleName::Parse(std::string_view name) {
  if (!IsValid(name)) return std::nullopt;
  return ArticleName(std::string(name));
}

Expr Expr::Literal(std::int64_t v, Span span) {
  Expr e;
  e.kind = Kind::kLiteral;
  e.value = v;
  e.span = span;
  return e;
}

Expr Expr::Identifier(std::string name, Span span) {
  Expr e;
  e.kind = Kind::kIdentifier;
  e.name = std::move(name);
  e.span = span;
  return e;
}

Expr Expr::Binary(BinaryOp op, Expr lhs, Expr rhs, Span span) {
  Expr e;
  e.kind = Kind::kBinary;
  e.op = op;
  e.span = span;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

Expr Expr::Paren(Expr inner, Span span) {
  Expr e;
  e.kind = Kind::kParen;
  e.span = span;
  e.operands.push_back(std::move(inner));
  return e;
}

std::string_view ToString(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kSyntax: return "Syntax";
    case ParseErrorKind::kNameMismatch: return "NameMismatch";
    case ParseErrorKind::kInvalidName: return "InvalidName";
    case ParseErrorKind::kDuplicateLabel: return "DuplicateLabel";
    case ParseErrorKind::kDuplicateImport: return "DuplicateImport";
    case ParseErrorKind::kDuplicateSymbol: return "DuplicateSymbol";
    case ParseErrorKind::kSelfImport: return "SelfImport";
    case ParseErrorKind::kIntegerRange: return "IntegerRange";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, Span span, std::string message)
    : std::runtime_error(std::to_string(span.line) + ":" +
                         std::to_string(span.column) + ": " + message),
      kind_(kind),
      span_(span),
      message_(std::move(message)) {}

EvalError::EvalError(EvalErrorKind kind, Span span, std::string name)
    : std::runtime_error(kind == EvalErrorKind::kOverflow
                             ? "integer overflow"
                             : "unbound identifier '" + name + "'"),
      kind_(kind),
      span_(span),
      name_(std::move(name)) {}

namespace {

constexpr std::array<std::string_view, 8> kKeywords = {
    "article", "environ", "imports", "begin",
    "def",     "thm",     "by",      "evaluation"};

bool IsKeyword(std::string_view w) {
  for (auto k : kKeywords)
    if (k == w) return true;
  return false;
}

enum class Tok {
  kWord,
  kInt,
  kMinus,
  kPlus,
  kStar,
  kLParen,
  kRParen,
  kColon,
  kAssign,
  kSemicolon,
  kComma,
  kEq,
  kLt,
  kLe,
  kEof,
};

struct Token {
  Tok kind = Tok::kEof;
  std::string_view text;
  Span span;
  size_t offset = 0;
};

std::string_view Describe(Tok t) {
  switch (t) {
    case Tok::kWord: return "word";
    case Tok::kInt: return "integer";
    case Tok::kMinus: return "'-'";
    case Tok::kPlus: return "'+'";
    case Tok::kStar: return "'*'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kColon: return "':'";
    case Tok::kAssign: return "':='";
    case Tok::kSemicolon: return "';'";
    case Tok::kComma: return "','";
    case Tok::kEq: return "'='";
    case Tok::kLt: return "'<'";
    case Tok::kLe: return "'<='";
    case Tok::kEof: return "end of input";
  }
  return "?";
}

// On-demand tokenizer; nothing past the last requested token is scanned.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token Next() {
    SkipTrivia();
    Token t;
    t.span = {line_, col_};
    t.offset = pos_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::kEof;
      return t;
    }
    char c = src_[pos_];
    auto single = [&](Tok k) {
      t.kind = k;
      t.text = src_.substr(pos_, 1);
      Advance(1);
      return t;
    };
    if (c >= 'a' && c <= 'z') {
      size_t e = pos_;
      while (e < src_.size() && IsWordChar(src_[e])) ++e;
      t.kind = Tok::kWord;
      t.text = src_.substr(pos_, e - pos_);
      Advance(e - pos_);
      return t;
    }
    if (c >= '0' && c <= '9') {
      size_t e = pos_;
      while (e < src_.size() && src_[e] >= '0' && src_[e] <= '9') ++e;
      if (e < src_.size() && IsWordChar(src_[e]))
        throw ParseError(ParseErrorKind::kSyntax, t.span, "malformed number");
      t.kind = Tok::kInt;
      t.text = src_.substr(pos_, e - pos_);
      Advance(e - pos_);
      return t;
    }
    switch (c) {
      case '-': return single(Tok::kMinus);
      case '+': return single(Tok::kPlus);
      case '*': return single(Tok::kStar);
      case '(': return single(Tok::kLParen);
      case ')': return single(Tok::kRParen);
      case ';': return single(Tok::kSemicolon);
      case ',': return single(Tok::kComma);
      case '=': return single(Tok::kEq);
      case ':':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          t.kind = Tok::kAssign;
          t.text = src_.substr(pos_, 2);
          Advance(2);
          return t;
        }
        return single(Tok::kColon);
      case '<':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          t.kind = Tok::kLe;
          t.text = src_.substr(pos_, 2);
          Advance(2);
          return t;
        }
        return single(Tok::kLt);
      default:
        break;
    }
    throw ParseError(ParseErrorKind::kSyntax, t.span,
                     "unexpected character '" + std::string(1, c) + "'");
  }

 private:
  static bool IsWordChar(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  }

  void Advance(size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void SkipTrivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        Advance(1);
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
        while (pos_ < src_.size() && src_[pos_] != '\n') Advance(1);
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { Shift(); }

  EnvironDecl ParseHeader(ArticleName* name_out, Span* name_span) {
    ExpectKeyword("article");
    Token name_tok = ExpectWord("article name");
    ArticleName name = ToArticleName(name_tok);
    if (name_out) *name_out = name;
    if (name_span) *name_span = name_tok.span;

    ExpectKeyword("environ");
    EnvironDecl env;
    if (AtKeyword("imports")) {
      Shift();
      do {
        Token t = ExpectWord("imported article name");
        ArticleName imp = ToArticleName(t);
        if (imp == name)
          throw ParseError(ParseErrorKind::kSelfImport, t.span,
                           "article '" + name.str() + "' imports itself");
        for (const auto& seen : env.imports) {
          if (seen == imp)
            throw ParseError(ParseErrorKind::kDuplicateImport, t.span,
                             "duplicate import '" + imp.str() + "'");
        }
        env.imports.push_back(std::move(imp));
        env.import_spans.push_back(t.span);
      } while (Accept(Tok::kComma));
      Expect(Tok::kSemicolon);
    }
    // Stop on 'begin' without lexing past it: the body is not our business
    // when only the header is wanted.
    if (!AtKeyword("begin")) throw Unexpected("'begin'");
    return env;
  }

  std::vector<Item> ParseItems() {
    Shift();  // past 'begin'
    std::vector<Item> items;
    std::set<std::string, std::less<>> labels;
    std::set<std::string, std::less<>> symbols;
    while (tok_.kind != Tok::kEof) {
      Item item;
      if (AtKeyword("def")) {
        Shift();
        Token label = ExpectIdent("definition label");
        Expect(Tok::kColon);
        Token sym = ExpectIdent("defined symbol");
        Expect(Tok::kAssign);
        Definition def;
        def.symbol = std::string(sym.text);
        def.symbol_span = sym.span;
        def.body = ParseExpr();
        Expect(Tok::kSemicolon);
        if (!symbols.insert(def.symbol).second)
          throw ParseError(ParseErrorKind::kDuplicateSymbol, sym.span,
                           "symbol '" + def.symbol + "' defined twice");
        item.label = std::string(label.text);
        item.span = label.span;
        item.content = std::move(def);
      } else if (AtKeyword("thm")) {
        Shift();
        Token label = ExpectIdent("theorem label");
        Expect(Tok::kColon);
        Theorem thm;
        thm.lhs = ParseExpr();
        thm.relation = ParseRelation();
        thm.rhs = ParseExpr();
        ExpectKeyword("by");
        if (AtKeyword("evaluation")) {
          Shift();
          thm.by_evaluation = true;
        } else {
          do {
            thm.refs.push_back(ParseRef());
          } while (Accept(Tok::kComma));
        }
        Expect(Tok::kSemicolon);
        item.label = std::string(label.text);
        item.span = label.span;
        item.content = std::move(thm);
      } else {
        throw Unexpected("'def' or 'thm'");
      }
      if (!labels.insert(item.label).second)
        throw ParseError(ParseErrorKind::kDuplicateLabel, item.span,
                         "duplicate label '" + item.label + "'");
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  void Shift() { tok_ = lexer_.Next(); }

  bool Accept(Tok k) {
    if (tok_.kind != k) return false;
    Shift();
    return true;
  }

  ParseError Unexpected(std::string_view wanted) const {
    std::string got = tok_.kind == Tok::kWord || tok_.kind == Tok::kInt
                          ? "'" + std::string(tok_.text) + "'"
                          : std::string(Describe(tok_.kind));
    return ParseError(ParseErrorKind::kSyntax, tok_.span,
                      "expected " + std::string(wanted) + ", found " + got);
  }

  Token Expect(Tok k) {
    if (tok_.kind != k) throw Unexpected(Describe(k));
    Token t = tok_;
    Shift();
    return t;
  }

  bool AtKeyword(std::string_view kw) const {
    return tok_.kind == Tok::kWord && tok_.text == kw;
  }

  void ExpectKeyword(std::string_view kw) {
    if (!AtKeyword(kw)) throw Unexpected("'" + std::string(kw) + "'");
    Shift();
  }

  Token ExpectWord(std::string_view what) {
    if (tok_.kind != Tok::kWord || IsKeyword(tok_.text)) throw Unexpected(what);
    Token t = tok_;
    Shift();
    return t;
  }

  Token ExpectIdent(std::string_view what) { return ExpectWord(what); }

  static ArticleName ToArticleName(const Token& t) {
    auto name = ArticleName::Parse(t.text);
    if (!name)
      throw ParseError(ParseErrorKind::kInvalidName, t.span,
                       "article name '" + std::string(t.text) +
                           "' exceeds " +
                           std::to_string(kMaxArticleNameLength) +
                           " characters");
    return *name;
  }

  Relation ParseRelation() {
    if (Accept(Tok::kEq)) return Relation::kEq;
    if (Accept(Tok::kLt)) return Relation::kLt;
    if (Accept(Tok::kLe)) return Relation::kLe;
    throw Unexpected("relation '=', '<' or '<='");
  }

  Ref ParseRef() {
    Token first = ExpectWord("reference label");
    Ref ref;
    ref.span = first.span;
    if (Accept(Tok::kColon)) {
      ref.article = ToArticleName(first);
      ref.label = std::string(ExpectWord("reference label").text);
    } else {
      ref.label = std::string(first.text);
    }
    return ref;
  }

  Expr ParseExpr() {
    Expr lhs = ParseTerm();
    while (tok_.kind == Tok::kPlus || tok_.kind == Tok::kMinus) {
      BinaryOp op = tok_.kind == Tok::kPlus ? BinaryOp::kAdd : BinaryOp::kSub;
      Span span = lhs.span;
      Shift();
      Expr rhs = ParseTerm();
      lhs = Expr::Binary(op, std::move(lhs), std::move(rhs), span);
    }
    return lhs;
  }

  Expr ParseTerm() {
    Expr lhs = ParseFactor();
    while (tok_.kind == Tok::kStar) {
      Span span = lhs.span;
      Shift();
      Expr rhs = ParseFactor();
      lhs = Expr::Binary(BinaryOp::kMul, std::move(lhs), std::move(rhs), span);
    }
    return lhs;
  }

  Expr ParseFactor() {
    if (tok_.kind == Tok::kInt) {
      Token t = tok_;
      Shift();
      return Expr::Literal(ToInteger(t.text, false, t.span), t.span);
    }
    if (tok_.kind == Tok::kMinus) {
      Token minus = tok_;
      Shift();
      if (tok_.kind != Tok::kInt || tok_.offset != minus.offset + 1)
        throw Unexpected("integer literal after '-'");
      Token t = tok_;
      Shift();
      return Expr::Literal(ToInteger(t.text, true, minus.span), minus.span);
    }
    if (tok_.kind == Tok::kLParen) {
      Span span = tok_.span;
      if (++depth_ > kMaxNesting)
        throw ParseError(ParseErrorKind::kSyntax, span,
                         "expression nested too deeply");
      Shift();
      Expr inner = ParseExpr();
      Expect(Tok::kRParen);
      --depth_;
      return Expr::Paren(std::move(inner), span);
    }
    Token t = ExpectWord("expression");
    return Expr::Identifier(std::string(t.text), t.span);
  }

  static std::int64_t ToInteger(std::string_view digits, bool negative,
                                Span span) {
    // Accumulate as a negative number so INT64_MIN is representable.
    std::int64_t v = 0;
    for (char c : digits) {
      int d = c - '0';
      if (__builtin_mul_overflow(v, 10, &v) || __builtin_sub_overflow(v, d, &v))
        throw ParseError(ParseErrorKind::kIntegerRange, span,
                         "integer literal out of 64-bit range");
    }
    if (negative) return v;
    if (v == std::numeric_limits<std::int64_t>::min())
      throw ParseError(ParseErrorKind::kIntegerRange, span,
                       "integer literal out of 64-bit range");
    return -v;
  }

  static constexpr int kMaxNesting = 512;

  Lexer lexer_;
  Token tok_;
  int depth_ = 0;
};

void AppendExpr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::kLiteral:
      out += std::to_string(e.value);
      break;
    case Expr::Kind::kIdentifier:
      out += e.name;
      break;
    case Expr::Kind::kParen:
      out += '(';
      AppendExpr(e.operands[0], out);
      out += ')';
      break;
    case Expr::Kind::kBinary:
      AppendExpr(e.operands[0], out);
      out += e.op == BinaryOp::kAdd ? " + " : e.op == BinaryOp::kSub ? " - " : " * ";
      AppendExpr(e.operands[1], out);
      break;
  }
}

}  // namespace

Article ParseArticle(std::string_view source, const ArticleName& expected_name) {
  Parser p(source);
  Article a;
  Span name_span;
  a.environ = p.ParseHeader(&a.name, &name_span);
  if (a.name != expected_name)
    throw ParseError(ParseErrorKind::kNameMismatch, name_span,
                     "article is named '" + a.name.str() + "' but file is '" +
                         expected_name.file_name() + "'");
  a.items = p.ParseItems();
  return a;
}

ArticleHeader ParseArticleHeader(std::string_view source) {
  Parser p(source);
  ArticleHeader h;
  h.environ = p.ParseHeader(&h.name, nullptr);
  return h;
}

EnvironDecl ParseEnviron(std::string_view source) {
  return ParseArticleHeader(source).environ;
}

std::int64_t EvaluateExpr(const Expr& e, const SymbolLookup& lookup) {
  switch (e.kind) {
    case Expr::Kind::kLiteral:
      return e.value;
    case Expr::Kind::kIdentifier: {
      auto v = lookup(e);
      if (!v) throw EvalError(EvalErrorKind::kUnboundIdentifier, e.span, e.name);
      return *v;
    }
    case Expr::Kind::kParen:
      return EvaluateExpr(e.operands[0], lookup);
    case Expr::Kind::kBinary: {
      std::int64_t l = EvaluateExpr(e.operands[0], lookup);
      std::int64_t r = EvaluateExpr(e.operands[1], lookup);
      std::int64_t out = 0;
      bool overflow = false;
      switch (e.op) {
        case BinaryOp::kAdd: overflow = __builtin_add_overflow(l, r, &out); break;
        case BinaryOp::kSub: overflow = __builtin_sub_overflow(l, r, &out); break;
        case BinaryOp::kMul: overflow = __builtin_mul_overflow(l, r, &out); break;
      }
      if (overflow) throw EvalError(EvalErrorKind::kOverflow, e.span, {});
      return out;
    }
  }
  return 0;
}

std::int64_t EvaluateExpr(const Expr& expr,
                          const std::map<std::string, std::int64_t>& bindings) {
  return EvaluateExpr(expr, [&](const Expr& id) -> std::optional<std::int64_t> {
    auto it = bindings.find(id.name);
    if (it == bindings.end()) return std::nullopt;
    return it->second;
  });
}

bool Holds(Relation relation, std::int64_t lhs, std::int64_t rhs) {
  switch (relation) {
    case Relation::kEq: return lhs == rhs;
    case Relation::kLt: return lhs < rhs;
    case Relation::kLe: return lhs <= rhs;
  }
  return false;
}

std::string_view ToString(Relation relation) {
  switch (relation) {
    case Relation::kEq: return "=";
    case Relation::kLt: return "<";
    case Relation::kLe: return "<=";
  }
  return "?";
}

std::string FormatExpr(const Expr& expr) {
  std::string out;
  AppendExpr(expr, out);
  return out;
}

std::string FormatStatement(const Theorem& theorem) {
  std::string out = FormatExpr(theorem.lhs);
  out += ' ';
  out += ToString(theorem.relation);
  out += ' ';
  AppendExpr(theorem.rhs, out);
  return out;
}

std::string FormatArticle(const Article& article) {
  std::string out = "article " + article.name.str() + "\nenviron";
  if (!article.environ.imports.empty()) {
    out += " imports ";
    for (size_t i = 0; i < article.environ.imports.size(); ++i) {
      if (i) out += ", ";
      out += article.environ.imports[i].str();
    }
    out += ';';
  }
  out += "\nbegin\n";
  for (const Item& item : article.items) {
    if (item.is_definition()) {
      const Definition& d = item.definition();
      out += "def " + item.label + " : " + d.symbol + " := ";
      AppendExpr(d.body, out);
    } else {
      const Theorem& t = item.theorem();
      out += "thm " + item.label + " : " + FormatStatement(t) + " by ";
      if (t.by_evaluation) {
        out += "evaluation";
      } else {
        for (size_t i = 0; i < t.refs.size(); ++i) {
          if (i) out += ", ";
          if (t.refs[i].article) out += t.refs[i].article->str() + ":";
          out += t.refs[i].label;
        }
      }
    }
    out += ";\n";
  }
  return out;
}

void ForEachIdentifier(const Expr& expr,
                       const std::function<void(const Expr&)>& fn) {
  if (expr.kind == Expr::Kind::kIdentifier) {
    fn(expr);
    return;
  }
  for (const Expr& sub : expr.operands) ForEachIdentifier(sub, fn);
}

}  // namespace fwiki
