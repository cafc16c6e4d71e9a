// Copyright 2026 The idiomperf Authors.
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

#include "idiomperf/pyast.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <set>
#include <sstream>

namespace idiomperf::py {

ParseError::ParseError(const std::string& what, int line, int col)
    : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + what),
      line_(line),
      col_(col) {}

namespace {

// ---------------------------------------------------------------------------
// Tokenizer

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

constexpr std::array<std::string_view, 5> kOps3 = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 19> kOps2 = {"->", ":=", "**", "//", "<<", ">>", "<=",
                                                    ">=", "==", "!=", "+=", "-=", "*=", "/=",
                                                    "%=", "&=", "|=", "^=", "@="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:.;=";

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view s) {
  if (s.size() > 2) return false;
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::set<std::string> prefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
  return prefixes.count(lower) > 0;
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    bool line_start = true;
    while (pos_ < src_.size()) {
      if (line_start && depth_ == 0) {
        line_start = false;
        if (handle_indentation()) {
          line_start = true;
          continue;
        }
      }
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\\') {
        std::size_t next = pos_ + 1;
        if (next < src_.size() && src_[next] == '\r') ++next;
        if (next < src_.size() && src_[next] == '\n') {
          pos_ = next + 1;
          ++line_;
          col_ = 0;
          continue;
        }
        throw ParseError("unexpected character after line continuation", line_, col_);
      }
      if (c == '\r') {
        advance();
        continue;
      }
      if (c == '\n') {
        if (depth_ == 0 && !out_.empty() && out_.back().kind != Tok::Newline &&
            out_.back().kind != Tok::Indent && out_.back().kind != Tok::Dedent) {
          out_.push_back({Tok::Newline, "", line_, col_});
        }
        advance_line();
        line_start = true;
        continue;
      }
      if (is_ident_start(static_cast<unsigned char>(c))) {
        lex_name();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (c == '\'' || c == '"') {
        lex_string(pos_, line_, col_);
        continue;
      }
      lex_op();
    }
    if (depth_ != 0) throw ParseError("unbalanced brackets at end of input", line_, col_);
    if (!out_.empty() && out_.back().kind != Tok::Newline && out_.back().kind != Tok::Dedent) {
      out_.push_back({Tok::Newline, "", line_, col_});
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      out_.push_back({Tok::Dedent, "", line_, 0});
    }
    out_.push_back({Tok::End, "", line_, 0});
    return std::move(out_);
  }

 private:
  void advance() {
    ++pos_;
    ++col_;
  }
  void advance_line() {
    ++pos_;
    ++line_;
    col_ = 0;
  }

  // Returns true when the line was blank or comment-only and was consumed.
  bool handle_indentation() {
    int width = 0;
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) {
      width = src_[pos_] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      advance();
    }
    if (pos_ >= src_.size()) return true;
    char c = src_[pos_];
    if (c == '#' || c == '\n' || c == '\r') {
      while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      if (pos_ < src_.size()) advance_line();
      return true;
    }
    if (c == '\\') return false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      out_.push_back({Tok::Indent, "", line_, 0});
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        out_.push_back({Tok::Dedent, "", line_, 0});
      }
      if (width != indents_.back()) throw ParseError("unindent does not match any outer level", line_, col_);
    }
    return false;
  }

  void lex_name() {
    std::size_t start = pos_;
    int line = line_, col = col_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) advance();
    std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') && is_string_prefix(word)) {
      lex_string(start, line, col);
      return;
    }
    out_.push_back({Tok::Name, std::string(word), line, col});
  }

  void lex_number() {
    std::size_t start = pos_;
    int col = col_;
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) advance();
    };
    auto is_dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && std::strchr("xXoObB", src_[pos_ + 1]) != nullptr &&
        src_[pos_ + 1] != '\0') {
      advance();
      advance();
      digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
    } else {
      digits(is_dec);
      if (pos_ < src_.size() && src_[pos_] == '.') {
        advance();
        digits(is_dec);
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t save = pos_;
        int save_col = col_;
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
        if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          digits(is_dec);
        } else {
          pos_ = save;
          col_ = save_col;
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) advance();
    }
    if (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
      throw ParseError("invalid numeric literal", line_, col_);
    }
    out_.push_back({Tok::Number, std::string(src_.substr(start, pos_ - start)), line_, col});
  }

  void lex_string(std::size_t start, int line, int col) {
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    if (triple) {
      advance();
      advance();
    }
    advance();
    while (true) {
      if (pos_ >= src_.size()) throw ParseError("unterminated string literal", line, col);
      char c = src_[pos_];
      if (c == '\\') {
        advance();
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n') {
            advance_line();
          } else {
            advance();
          }
        }
        continue;
      }
      if (c == '\n') {
        if (!triple) throw ParseError("EOL while scanning string literal", line_, col_);
        advance_line();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          advance();
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          advance();
          advance();
          advance();
          break;
        }
      }
      advance();
    }
    out_.push_back({Tok::String, std::string(src_.substr(start, pos_ - start)), line, col});
  }

  void lex_op() {
    auto rest = src_.substr(pos_);
    auto emit = [&](std::string_view op) {
      out_.push_back({Tok::Op, std::string(op), line_, col_});
      for (std::size_t k = 0; k < op.size(); ++k) advance();
      if (op == "(" || op == "[" || op == "{") ++depth_;
      if (op == ")" || op == "]" || op == "}") {
        if (depth_ == 0) throw ParseError("unmatched '" + std::string(op) + "'", line_, col_);
        --depth_;
      }
    };
    for (auto op : kOps3) {
      if (rest.substr(0, 3) == op) return emit(op);
    }
    for (auto op : kOps2) {
      if (rest.substr(0, 2) == op) return emit(op);
    }
    if (kOps1.find(rest[0]) != std::string_view::npos) return emit(rest.substr(0, 1));
    throw ParseError(std::string("invalid character '") + rest[0] + "'", line_, col_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  int depth_ = 0;
  std::vector<int> indents_;
  std::vector<Token> out_;
};

// ---------------------------------------------------------------------------
// Parser

const std::set<std::string, std::less<>> kKeywords = {
    "False", "None",   "True",   "and",      "as",    "assert", "async",  "await",
    "break", "class",  "continue", "def",    "del",   "elif",   "else",   "except",
    "finally", "for",  "from",   "global",   "if",    "import", "in",     "is",
    "lambda", "nonlocal", "not", "or",       "pass",  "raise",  "return", "try",
    "while", "with",   "yield"};

const std::set<std::string, std::less<>> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                    "&=", "|=", "^=", ">>=", "<<=", "**="};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Module parse_module() {
    Module out;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        next();
        continue;
      }
      parse_statement(out);
    }
    return out;
  }

  Expr parse_single_expr() {
    while (peek().kind == Tok::Newline) next();
    Expr e = parse_testlist_star();
    while (peek().kind == Tok::Newline) next();
    if (peek().kind != Tok::End) fail("unexpected token after expression");
    return e;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    std::size_t idx = std::min(i_ + k, toks_.size() - 1);
    return toks_[idx];
  }
  const Token& next() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    if (t.kind != Tok::Newline && t.kind != Tok::Indent && t.kind != Tok::Dedent && t.kind != Tok::End) {
      last_line_ = t.line;
    }
    return t;
  }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    return peek(k).kind == Tok::Op && peek(k).text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    return peek(k).kind == Tok::Name && peek(k).text == kw;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    next();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    std::string shown = t.kind == Tok::End ? "end of input" : t.kind == Tok::Newline ? "newline" : "'" + t.text + "'";
    throw ParseError(what + " (at " + shown + ")", t.line, t.col);
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
  }
  std::string expect_name() {
    if (peek().kind != Tok::Name || kKeywords.count(peek().text) > 0) fail("expected identifier");
    return next().text;
  }
  void expect_newline() {
    if (peek().kind == Tok::End) return;
    if (peek().kind != Tok::Newline) fail("expected end of statement");
    next();
  }

  Expr node(ExprKind kind, const Token& at) {
    Expr e;
    e.kind = kind;
    e.line = at.line;
    e.col = at.col;
    return e;
  }

  // -- statements -----------------------------------------------------------

  void parse_statement(Module& out) {
    const Token& t = peek();
    if (t.kind == Tok::Indent) fail("unexpected indent");
    if (t.kind == Tok::Op && t.text == "@") {
      out.push_back(parse_decorated());
      return;
    }
    if (t.kind == Tok::Name) {
      if (t.text == "if") return out.push_back(parse_if());
      if (t.text == "while") return out.push_back(parse_while());
      if (t.text == "for") return out.push_back(parse_for());
      if (t.text == "try") return out.push_back(parse_try());
      if (t.text == "with") return out.push_back(parse_with());
      if (t.text == "def") return out.push_back(parse_def({}));
      if (t.text == "class") return out.push_back(parse_class({}));
      if (t.text == "async") fail("async constructs are not supported");
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(Module& out) {
    while (true) {
      out.push_back(parse_small());
      if (accept_op(";")) {
        if (peek().kind == Tok::Newline || peek().kind == Tok::End) break;
        continue;
      }
      break;
    }
    expect_newline();
  }

  std::vector<Stmt> parse_block() {
    expect_op(":");
    std::vector<Stmt> body;
    if (peek().kind == Tok::Newline) {
      next();
      if (peek().kind != Tok::Indent) fail("expected an indented block");
      next();
      while (peek().kind != Tok::Dedent && peek().kind != Tok::End) {
        if (peek().kind == Tok::Newline) {
          next();
          continue;
        }
        parse_statement(body);
      }
      if (peek().kind == Tok::Dedent) next();
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  Stmt begin(StmtKind kind) {
    Stmt s;
    s.kind = kind;
    s.line = peek().line;
    return s;
  }
  Stmt& finish(Stmt& s) {
    s.end_line = last_line_;
    return s;
  }

  Stmt parse_if() {
    Stmt s = begin(StmtKind::If);
    next();  // if / elif
    s.value = parse_namedexpr_test();
    s.body = parse_block();
    if (at_kw("elif")) {
      s.orelse.push_back(parse_if());
    } else if (accept_kw("else")) {
      s.orelse = parse_block();
    }
    return finish(s);
  }

  Stmt parse_while() {
    Stmt s = begin(StmtKind::While);
    next();
    s.value = parse_namedexpr_test();
    s.body = parse_block();
    if (accept_kw("else")) s.orelse = parse_block();
    return finish(s);
  }

  Stmt parse_for() {
    Stmt s = begin(StmtKind::For);
    next();
    s.targets.push_back(parse_exprlist());
    expect_kw("in");
    s.value = parse_testlist_star();
    s.body = parse_block();
    if (accept_kw("else")) s.orelse = parse_block();
    return finish(s);
  }

  Stmt parse_try() {
    Stmt s = begin(StmtKind::Try);
    next();
    s.body = parse_block();
    while (at_kw("except")) {
      Stmt h = begin(StmtKind::ExceptHandler);
      next();
      if (!at_op(":")) {
        h.value = parse_test();
        if (accept_kw("as")) h.text = expect_name();
      }
      h.body = parse_block();
      s.handlers.push_back(std::move(finish(h)));
    }
    if (accept_kw("else")) s.orelse = parse_block();
    if (accept_kw("finally")) s.finalbody = parse_block();
    if (s.handlers.empty() && s.finalbody.empty()) fail("try statement needs except or finally");
    return finish(s);
  }

  Stmt parse_with() {
    Stmt s = begin(StmtKind::With);
    const Token& at = next();
    do {
      Expr item = node(ExprKind::Tuple, at);
      item.items.push_back(parse_test());
      if (accept_kw("as")) {
        item.items.push_back(parse_target_expr());
      } else {
        item.items.push_back(Expr{});
      }
      s.targets.push_back(std::move(item));
    } while (accept_op(","));
    s.body = parse_block();
    return finish(s);
  }

  Stmt parse_decorated() {
    std::vector<Expr> decorators;
    while (accept_op("@")) {
      decorators.push_back(parse_namedexpr_test());
      expect_newline();
    }
    if (at_kw("def")) return parse_def(std::move(decorators));
    if (at_kw("class")) return parse_class(std::move(decorators));
    fail("decorator must precede def or class");
  }

  Stmt parse_def(std::vector<Expr> decorators) {
    Stmt s = begin(StmtKind::FunctionDef);
    if (!decorators.empty()) s.line = decorators.front().line - 1 > 0 ? decorators.front().line - 1 : 1;
    s.decorators = std::move(decorators);
    next();
    s.text = expect_name();
    expect_op("(");
    s.params = parse_params(")", true);
    expect_op(")");
    if (accept_op("->")) s.extra = parse_test();
    s.body = parse_block();
    return finish(s);
  }

  Stmt parse_class(std::vector<Expr> decorators) {
    Stmt s = begin(StmtKind::ClassDef);
    s.decorators = std::move(decorators);
    next();
    s.text = expect_name();
    if (accept_op("(")) {
      s.params = parse_arglist();
      expect_op(")");
    }
    s.body = parse_block();
    return finish(s);
  }

  std::vector<Expr> parse_params(std::string_view close, bool annotations) {
    std::vector<Expr> params;
    while (!at_op(close)) {
      Expr p = node(ExprKind::Param, peek());
      p.ops.push_back("");
      p.items = {Expr{}, Expr{}};
      if (accept_op("/")) {
        p.ops[0] = "/";
      } else if (accept_op("*")) {
        p.ops[0] = "*";
        if (peek().kind == Tok::Name) p.text = expect_name();
      } else if (accept_op("**")) {
        p.ops[0] = "**";
        p.text = expect_name();
      } else {
        p.text = expect_name();
      }
      if (!p.text.empty() && annotations && accept_op(":")) p.items[0] = parse_test();
      if (p.ops[0].empty() && accept_op("=")) p.items[1] = parse_test();
      params.push_back(std::move(p));
      if (!accept_op(",")) break;
    }
    return params;
  }

  Stmt parse_small() {
    const Token& t = peek();
    if (t.kind == Tok::Name) {
      if (t.text == "pass") {
        Stmt s = begin(StmtKind::Pass);
        next();
        return finish(s);
      }
      if (t.text == "break") {
        Stmt s = begin(StmtKind::Break);
        next();
        return finish(s);
      }
      if (t.text == "continue") {
        Stmt s = begin(StmtKind::Continue);
        next();
        return finish(s);
      }
      if (t.text == "return") {
        Stmt s = begin(StmtKind::Return);
        next();
        if (!at_end_of_small()) s.value = parse_testlist_star();
        return finish(s);
      }
      if (t.text == "raise") {
        Stmt s = begin(StmtKind::Raise);
        next();
        if (!at_end_of_small()) {
          s.value = parse_test();
          if (accept_kw("from")) s.extra = parse_test();
        }
        return finish(s);
      }
      if (t.text == "global" || t.text == "nonlocal") {
        Stmt s = begin(t.text == "global" ? StmtKind::Global : StmtKind::Nonlocal);
        next();
        do {
          s.names.push_back(expect_name());
        } while (accept_op(","));
        return finish(s);
      }
      if (t.text == "del") {
        Stmt s = begin(StmtKind::Del);
        next();
        do {
          s.targets.push_back(parse_expr());
        } while (accept_op(",") && !at_end_of_small());
        return finish(s);
      }
      if (t.text == "assert") {
        Stmt s = begin(StmtKind::Assert);
        next();
        s.value = parse_test();
        if (accept_op(",")) s.extra = parse_test();
        return finish(s);
      }
      if (t.text == "import" || t.text == "from") return parse_import();
    }
    return parse_expr_stmt();
  }

  bool at_end_of_small() const {
    return peek().kind == Tok::Newline || peek().kind == Tok::End || at_op(";");
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  Stmt parse_import() {
    Stmt s = begin(StmtKind::Import);
    if (accept_kw("import")) {
      std::string text = "import ";
      bool first = true;
      do {
        if (!first) text += ", ";
        first = false;
        text += parse_dotted_name();
        if (accept_kw("as")) text += " as " + expect_name();
      } while (accept_op(","));
      s.text = text;
      return finish(s);
    }
    expect_kw("from");
    std::string module;
    while (at_op(".") || at_op("...")) module += next().text;
    if (!at_kw("import")) module += parse_dotted_name();
    expect_kw("import");
    std::string text = "from " + module + " import ";
    if (accept_op("*")) {
      s.text = text + "*";
      return finish(s);
    }
    bool paren = accept_op("(");
    bool first = true;
    do {
      if (paren && at_op(")")) break;
      if (!first) text += ", ";
      first = false;
      text += expect_name();
      if (accept_kw("as")) text += " as " + expect_name();
    } while (accept_op(","));
    if (paren) expect_op(")");
    s.text = text;
    return finish(s);
  }

  Stmt parse_expr_stmt() {
    Stmt s = begin(StmtKind::Expr);
    Expr first = at_kw("yield") ? parse_yield() : parse_testlist_star();
    if (at_op(":")) {
      next();
      s.kind = StmtKind::AnnAssign;
      s.targets.push_back(std::move(first));
      s.extra = parse_test();
      if (accept_op("=")) s.value = at_kw("yield") ? parse_yield() : parse_testlist_star();
      return finish(s);
    }
    if (peek().kind == Tok::Op && kAugOps.count(peek().text) > 0) {
      std::string op = next().text;
      s.kind = StmtKind::AugAssign;
      s.text = op.substr(0, op.size() - 1);
      s.targets.push_back(std::move(first));
      s.value = at_kw("yield") ? parse_yield() : parse_testlist_star();
      return finish(s);
    }
    if (at_op("=")) {
      s.kind = StmtKind::Assign;
      s.targets.push_back(std::move(first));
      while (accept_op("=")) {
        s.targets.push_back(at_kw("yield") ? parse_yield() : parse_testlist_star());
      }
      s.value = std::move(s.targets.back());
      s.targets.pop_back();
      return finish(s);
    }
    s.value = std::move(first);
    return finish(s);
  }

  // -- expressions ----------------------------------------------------------

  Expr parse_yield() {
    const Token& at = next();
    if (accept_kw("from")) {
      Expr e = node(ExprKind::YieldFrom, at);
      e.items.push_back(parse_test());
      return e;
    }
    Expr e = node(ExprKind::Yield, at);
    if (at_end_of_small() || at_op(")") || at_op("=")) {
      e.items.push_back(Expr{});
    } else {
      e.items.push_back(parse_testlist_star());
    }
    return e;
  }

  // test | star_expr, comma separated; a bare comma makes a tuple.
  Expr parse_testlist_star() {
    const Token& at = peek();
    Expr first = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
    if (!at_op(",")) return first;
    Expr tup = node(ExprKind::Tuple, at);
    tup.items.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expr()) break;
      tup.items.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
    }
    return tup;
  }

  // Targets of `for` statements and comprehensions (bitwise-or level).
  Expr parse_exprlist() {
    const Token& at = peek();
    Expr first = at_op("*") ? parse_star_expr() : parse_expr();
    if (!at_op(",")) return first;
    Expr tup = node(ExprKind::Tuple, at);
    tup.items.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expr() || at_kw("in")) break;
      tup.items.push_back(at_op("*") ? parse_star_expr() : parse_expr());
    }
    return tup;
  }

  Expr parse_target_expr() { return parse_expr(); }

  bool starts_expr() const {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Name:
        return kKeywords.count(t.text) == 0 || t.text == "None" || t.text == "True" || t.text == "False" ||
               t.text == "not" || t.text == "lambda" || t.text == "await" || t.text == "yield";
      case Tok::Number:
      case Tok::String:
        return true;
      case Tok::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "..." || t.text == "**";
      default:
        return false;
    }
  }

  Expr parse_star_expr() {
    const Token& at = next();  // '*'
    Expr e = node(ExprKind::Starred, at);
    e.items.push_back(parse_expr());
    return e;
  }

  Expr parse_namedexpr_test() {
    const Token& at = peek();
    Expr e = parse_test();
    if (at_op(":=")) {
      next();
      Expr n = node(ExprKind::NamedExpr, at);
      n.items.push_back(std::move(e));
      n.items.push_back(parse_test());
      return n;
    }
    return e;
  }

  Expr parse_test() {
    if (at_kw("lambda")) return parse_lambda();
    const Token& at = peek();
    Expr e = parse_or();
    if (at_kw("if")) {
      next();
      Expr ifexp = node(ExprKind::IfExp, at);
      Expr test = parse_or();
      expect_kw("else");
      Expr orelse = parse_test();
      ifexp.items.push_back(std::move(test));
      ifexp.items.push_back(std::move(e));
      ifexp.items.push_back(std::move(orelse));
      return ifexp;
    }
    return e;
  }

  Expr parse_lambda() {
    const Token& at = next();
    Expr e = node(ExprKind::Lambda, at);
    e.items = parse_params(":", false);
    expect_op(":");
    e.items.push_back(parse_test());
    return e;
  }

  Expr parse_or() {
    const Token& at = peek();
    Expr e = parse_and();
    if (!at_kw("or")) return e;
    Expr b = node(ExprKind::BoolOp, at);
    b.text = "or";
    b.items.push_back(std::move(e));
    while (accept_kw("or")) b.items.push_back(parse_and());
    return b;
  }

  Expr parse_and() {
    const Token& at = peek();
    Expr e = parse_not();
    if (!at_kw("and")) return e;
    Expr b = node(ExprKind::BoolOp, at);
    b.text = "and";
    b.items.push_back(std::move(e));
    while (accept_kw("and")) b.items.push_back(parse_not());
    return b;
  }

  Expr parse_not() {
    if (at_kw("not")) {
      const Token& at = next();
      Expr e = node(ExprKind::UnaryOp, at);
      e.text = "not";
      e.items.push_back(parse_not());
      return e;
    }
    return parse_comparison();
  }

  std::string comp_op() {
    const Token& t = peek();
    if (t.kind == Tok::Op &&
        (t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" || t.text == "!=")) {
      return next().text;
    }
    if (at_kw("in")) {
      next();
      return "in";
    }
    if (at_kw("not") && at_kw("in", 1)) {
      next();
      next();
      return "not in";
    }
    if (at_kw("is")) {
      next();
      if (accept_kw("not")) return "is not";
      return "is";
    }
    return {};
  }

  Expr parse_comparison() {
    const Token& at = peek();
    Expr e = parse_expr();
    std::string op = comp_op();
    if (op.empty()) return e;
    Expr c = node(ExprKind::Compare, at);
    c.items.push_back(std::move(e));
    while (!op.empty()) {
      c.ops.push_back(op);
      c.items.push_back(parse_expr());
      op = comp_op();
    }
    return c;
  }

  template <typename Next>
  Expr parse_binary(std::initializer_list<std::string_view> ops, Next next_level) {
    const Token& at = peek();
    Expr left = (this->*next_level)();
    while (true) {
      bool matched = false;
      for (auto op : ops) {
        if (at_op(op)) {
          next();
          Expr b = node(ExprKind::BinOp, at);
          b.text = std::string(op);
          b.items.push_back(std::move(left));
          b.items.push_back((this->*next_level)());
          left = std::move(b);
          matched = true;
          break;
        }
      }
      if (!matched) return left;
    }
  }

  Expr parse_expr() { return parse_binary({"|"}, &Parser::parse_xor); }
  Expr parse_xor() { return parse_binary({"^"}, &Parser::parse_bitand); }
  Expr parse_bitand() { return parse_binary({"&"}, &Parser::parse_shift); }
  Expr parse_shift() { return parse_binary({"<<", ">>"}, &Parser::parse_arith); }
  Expr parse_arith() { return parse_binary({"+", "-"}, &Parser::parse_term); }
  Expr parse_term() { return parse_binary({"*", "@", "/", "%", "//"}, &Parser::parse_factor); }

  Expr parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token& at = next();
      Expr e = node(ExprKind::UnaryOp, at);
      e.text = at.text;
      e.items.push_back(parse_factor());
      return e;
    }
    return parse_power();
  }

  Expr parse_power() {
    const Token& at = peek();
    Expr base = parse_atom_expr();
    if (at_op("**")) {
      next();
      Expr b = node(ExprKind::BinOp, at);
      b.text = "**";
      b.items.push_back(std::move(base));
      b.items.push_back(parse_factor());
      return b;
    }
    return base;
  }

  Expr parse_atom_expr() {
    if (at_kw("await")) {
      const Token& at = next();
      Expr e = node(ExprKind::Await, at);
      e.items.push_back(parse_atom_expr());
      return e;
    }
    Expr e = parse_atom();
    while (true) {
      if (at_op("(")) {
        const Token& at = next();
        Expr call = node(ExprKind::Call, at);
        call.line = e.line;
        call.col = e.col;
        call.items.push_back(std::move(e));
        for (auto& a : parse_arglist()) call.items.push_back(std::move(a));
        expect_op(")");
        e = std::move(call);
      } else if (at_op("[")) {
        next();
        Expr sub;
        sub.kind = ExprKind::Subscript;
        sub.line = e.line;
        sub.col = e.col;
        sub.items.push_back(std::move(e));
        sub.items.push_back(parse_subscriptlist());
        expect_op("]");
        e = std::move(sub);
      } else if (at_op(".")) {
        next();
        Expr attr;
        attr.kind = ExprKind::Attribute;
        attr.line = e.line;
        attr.col = e.col;
        attr.text = expect_name();
        attr.items.push_back(std::move(e));
        e = std::move(attr);
      } else {
        return e;
      }
    }
  }

  std::vector<Expr> parse_arglist() {
    std::vector<Expr> args;
    while (!at_op(")")) {
      const Token& at = peek();
      if (accept_op("*")) {
        Expr s = node(ExprKind::Starred, at);
        s.items.push_back(parse_test());
        args.push_back(std::move(s));
      } else if (accept_op("**")) {
        Expr k = node(ExprKind::Keyword, at);
        k.items.push_back(parse_test());
        args.push_back(std::move(k));
      } else if (peek().kind == Tok::Name && at_op("=", 1)) {
        Expr k = node(ExprKind::Keyword, at);
        k.text = expect_name();
        next();  // '='
        k.items.push_back(parse_test());
        args.push_back(std::move(k));
      } else {
        Expr a = parse_namedexpr_test();
        if (at_kw("for")) {
          Expr g = node(ExprKind::GeneratorExp, at);
          g.items.push_back(std::move(a));
          parse_comp_fors(g);
          a = std::move(g);
        }
        args.push_back(std::move(a));
      }
      if (!accept_op(",")) break;
    }
    return args;
  }

  Expr parse_subscript() {
    const Token& at = peek();
    Expr lower;
    if (!at_op(":")) {
      lower = parse_namedexpr_test();
      if (!at_op(":")) return lower;
    }
    next();  // ':'
    Expr sl = node(ExprKind::Slice, at);
    Expr upper, step;
    if (!at_op(":") && !at_op("]") && !at_op(",")) upper = parse_test();
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) step = parse_test();
    }
    sl.items.push_back(std::move(lower));
    sl.items.push_back(std::move(upper));
    sl.items.push_back(std::move(step));
    return sl;
  }

  Expr parse_subscriptlist() {
    const Token& at = peek();
    Expr first = at_op("*") ? parse_star_expr() : parse_subscript();
    if (!at_op(",")) return first;
    Expr tup = node(ExprKind::Tuple, at);
    tup.items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      tup.items.push_back(at_op("*") ? parse_star_expr() : parse_subscript());
    }
    return tup;
  }

  void parse_comp_fors(Expr& comp) {
    while (at_kw("for")) {
      if (at_kw("async")) fail("async comprehensions are not supported");
      const Token& at = next();
      Expr cf = node(ExprKind::CompFor, at);
      cf.items.push_back(parse_exprlist());
      expect_kw("in");
      cf.items.push_back(parse_or());
      while (at_kw("if")) {
        next();
        cf.items.push_back(parse_or());
      }
      comp.items.push_back(std::move(cf));
    }
  }

  Expr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          Expr e = node(ExprKind::Constant, t);
          e.text = next().text;
          return e;
        }
        if (kKeywords.count(t.text) > 0) fail("unexpected keyword");
        Expr e = node(ExprKind::Name, t);
        e.text = next().text;
        return e;
      }
      case Tok::Number: {
        Expr e = node(ExprKind::Constant, t);
        e.text = next().text;
        return e;
      }
      case Tok::String: {
        Expr e = node(ExprKind::Constant, t);
        e.text = next().text;
        while (peek().kind == Tok::String) e.text += " " + next().text;
        return e;
      }
      case Tok::Op:
        break;
      default:
        fail("expected an expression");
    }
    if (at_op("...")) {
      Expr e = node(ExprKind::Constant, t);
      e.text = next().text;
      return e;
    }
    if (at_op("(")) {
      const Token& at = next();
      if (accept_op(")")) return node(ExprKind::Tuple, at);
      if (at_kw("yield")) {
        Expr y = parse_yield();
        expect_op(")");
        return y;
      }
      Expr first = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
      if (at_kw("for")) {
        Expr g = node(ExprKind::GeneratorExp, at);
        g.items.push_back(std::move(first));
        parse_comp_fors(g);
        expect_op(")");
        return g;
      }
      if (!at_op(",")) {
        expect_op(")");
        return first;
      }
      Expr tup = node(ExprKind::Tuple, at);
      tup.items.push_back(std::move(first));
      while (accept_op(",")) {
        if (at_op(")")) break;
        tup.items.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
      }
      expect_op(")");
      return tup;
    }
    if (at_op("[")) {
      const Token& at = next();
      Expr list = node(ExprKind::List, at);
      if (accept_op("]")) return list;
      Expr first = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
      if (at_kw("for")) {
        Expr lc = node(ExprKind::ListComp, at);
        lc.items.push_back(std::move(first));
        parse_comp_fors(lc);
        expect_op("]");
        return lc;
      }
      list.items.push_back(std::move(first));
      while (accept_op(",")) {
        if (at_op("]")) break;
        list.items.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
      }
      expect_op("]");
      return list;
    }
    if (at_op("{")) {
      const Token& at = next();
      if (accept_op("}")) return node(ExprKind::Dict, at);
      if (at_op("**") || !at_op("*")) {
        Expr key;
        bool dict = false;
        if (accept_op("**")) {
          dict = true;
        } else {
          key = parse_test();
          dict = at_op(":");
          if (!dict) return parse_set_rest(at, std::move(key));
          next();
        }
        Expr value = dict && key.absent() ? parse_expr() : parse_test();
        if (!key.absent() && at_kw("for")) {
          Expr dc = node(ExprKind::DictComp, at);
          dc.items.push_back(std::move(key));
          dc.items.push_back(std::move(value));
          parse_comp_fors(dc);
          expect_op("}");
          return dc;
        }
        Expr d = node(ExprKind::Dict, at);
        d.items.push_back(std::move(key));
        d.items.push_back(std::move(value));
        while (accept_op(",")) {
          if (at_op("}")) break;
          if (accept_op("**")) {
            d.items.push_back(Expr{});
            d.items.push_back(parse_expr());
          } else {
            d.items.push_back(parse_test());
            expect_op(":");
            d.items.push_back(parse_test());
          }
        }
        expect_op("}");
        return d;
      }
      return parse_set_rest(at, parse_star_expr());
    }
    fail("expected an expression");
  }

  Expr parse_set_rest(const Token& at, Expr first) {
    if (at_kw("for")) {
      Expr sc = node(ExprKind::SetComp, at);
      sc.items.push_back(std::move(first));
      parse_comp_fors(sc);
      expect_op("}");
      return sc;
    }
    Expr s = node(ExprKind::Set, at);
    s.items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      s.items.push_back(at_op("*") ? parse_star_expr() : parse_test());
    }
    expect_op("}");
    return s;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int last_line_ = 1;
};

// ---------------------------------------------------------------------------
// Printer

enum Prec : int {
  kTuple = 0,
  kNamed = 1,
  kLambda = 2,
  kIfExp = 3,
  kOr = 4,
  kAnd = 5,
  kNot = 6,
  kCompare = 7,
  kBitOr = 8,
  kBitXor = 9,
  kBitAnd = 10,
  kShift = 11,
  kArith = 12,
  kTerm = 13,
  kUnary = 14,
  kPower = 15,
  kAwait = 16,
  kAtom = 17,
};

int binop_prec(const std::string& op) {
  if (op == "|") return kBitOr;
  if (op == "^") return kBitXor;
  if (op == "&") return kBitAnd;
  if (op == "<<" || op == ">>") return kShift;
  if (op == "+" || op == "-") return kArith;
  if (op == "**") return kPower;
  return kTerm;
}

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Tuple:
      return e.items.empty() ? kAtom : kTuple;
    case ExprKind::Yield:
    case ExprKind::YieldFrom:
      return kTuple;
    case ExprKind::NamedExpr:
      return kNamed;
    case ExprKind::Lambda:
      return kLambda;
    case ExprKind::IfExp:
      return kIfExp;
    case ExprKind::BoolOp:
      return e.text == "or" ? kOr : kAnd;
    case ExprKind::UnaryOp:
      return e.text == "not" ? kNot : kUnary;
    case ExprKind::Compare:
      return kCompare;
    case ExprKind::BinOp:
      return binop_prec(e.text);
    case ExprKind::Await:
      return kAwait;
    case ExprKind::Starred:
      return kBitOr;
    default:
      return kAtom;
  }
}

std::string emit(const Expr& e, int min_prec);

std::string join(const std::vector<Expr>& items, std::size_t from, int min_prec, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t k = from; k < items.size(); ++k) {
    if (k > from) out += sep;
    out += emit(items[k], min_prec);
  }
  return out;
}

std::string emit_params(const std::vector<Expr>& params, std::size_t count) {
  std::string out;
  for (std::size_t k = 0; k < count; ++k) {
    const Expr& p = params[k];
    if (k > 0) out += ", ";
    out += p.ops.empty() ? "" : p.ops[0];
    out += p.text;
    bool annotated = !p.items[0].absent();
    if (annotated) out += ": " + emit(p.items[0], kLambda);
    if (!p.items[1].absent()) out += (annotated ? " = " : "=") + emit(p.items[1], kLambda);
  }
  return out;
}

std::string emit_comp_fors(const Expr& comp, std::size_t from) {
  std::string out;
  for (std::size_t k = from; k < comp.items.size(); ++k) {
    const Expr& cf = comp.items[k];
    out += " for " + emit(cf.items[0], kTuple) + " in " + emit(cf.items[1], kOr);
    for (std::size_t j = 2; j < cf.items.size(); ++j) out += " if " + emit(cf.items[j], kOr);
  }
  return out;
}

std::string emit_index(const Expr& index) {
  if (index.kind == ExprKind::Tuple && !index.items.empty()) {
    std::string out = join(index.items, 0, kLambda);
    if (index.items.size() == 1) out += ",";
    return out;
  }
  return emit(index, kLambda);
}

std::string emit_raw(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Absent:
      return "";
    case ExprKind::Name:
    case ExprKind::Constant:
      return e.text;
    case ExprKind::Tuple: {
      if (e.items.empty()) return "()";
      std::string out = join(e.items, 0, kLambda);
      if (e.items.size() == 1) out += ",";
      return out;
    }
    case ExprKind::List:
      return "[" + join(e.items, 0, kLambda) + "]";
    case ExprKind::Set:
      return "{" + join(e.items, 0, kLambda) + "}";
    case ExprKind::Dict: {
      std::string out = "{";
      for (std::size_t k = 0; k + 1 < e.items.size(); k += 2) {
        if (k > 0) out += ", ";
        if (e.items[k].absent()) {
          out += "**" + emit(e.items[k + 1], kBitOr);
        } else {
          out += emit(e.items[k], kIfExp) + ": " + emit(e.items[k + 1], kLambda);
        }
      }
      return out + "}";
    }
    case ExprKind::ListComp:
      return "[" + emit(e.items[0], kLambda) + emit_comp_fors(e, 1) + "]";
    case ExprKind::SetComp:
      return "{" + emit(e.items[0], kLambda) + emit_comp_fors(e, 1) + "}";
    case ExprKind::GeneratorExp:
      return "(" + emit(e.items[0], kLambda) + emit_comp_fors(e, 1) + ")";
    case ExprKind::DictComp:
      return "{" + emit(e.items[0], kIfExp) + ": " + emit(e.items[1], kLambda) + emit_comp_fors(e, 2) + "}";
    case ExprKind::CompFor:
      return emit_comp_fors(make_node(ExprKind::GeneratorExp, {Expr{}, e}), 1).substr(1);
    case ExprKind::BoolOp:
      return join(e.items, 0, e.text == "or" ? kAnd : kNot, e.text == "or" ? " or " : " and ");
    case ExprKind::BinOp: {
      int p = binop_prec(e.text);
      if (e.text == "**") return emit(e.items[0], kAwait) + " ** " + emit(e.items[1], kUnary);
      return emit(e.items[0], p) + " " + e.text + " " + emit(e.items[1], p + 1);
    }
    case ExprKind::UnaryOp:
      if (e.text == "not") return "not " + emit(e.items[0], kNot);
      return e.text + emit(e.items[0], kUnary);
    case ExprKind::Compare: {
      std::string out = emit(e.items[0], kBitOr);
      for (std::size_t k = 0; k < e.ops.size(); ++k) out += " " + e.ops[k] + " " + emit(e.items[k + 1], kBitOr);
      return out;
    }
    case ExprKind::IfExp:
      return emit(e.items[1], kOr) + " if " + emit(e.items[0], kOr) + " else " + emit(e.items[2], kIfExp);
    case ExprKind::Call: {
      std::string out = emit(e.items[0], kAtom) + "(";
      for (std::size_t k = 1; k < e.items.size(); ++k) {
        if (k > 1) out += ", ";
        out += emit(e.items[k], kLambda);
      }
      return out + ")";
    }
    case ExprKind::Keyword:
      if (e.text.empty()) return "**" + emit(e.items[0], kIfExp);
      return e.text + "=" + emit(e.items[0], kLambda);
    case ExprKind::Attribute: {
      const Expr& v = e.items[0];
      bool bare_int = v.kind == ExprKind::Constant && !v.text.empty() &&
                      std::isdigit(static_cast<unsigned char>(v.text[0])) &&
                      v.text.find_first_of(".eEjJxX") == std::string::npos;
      return (bare_int ? "(" + v.text + ")" : emit(v, kAtom)) + "." + e.text;
    }
    case ExprKind::Subscript:
      return emit(e.items[0], kAtom) + "[" + emit_index(e.items[1]) + "]";
    case ExprKind::Slice: {
      std::string out = emit(e.items[0], kLambda) + ":" + emit(e.items[1], kLambda);
      if (!e.items[2].absent()) out += ":" + emit(e.items[2], kLambda);
      return out;
    }
    case ExprKind::Starred:
      return "*" + emit(e.items[0], kBitOr);
    case ExprKind::Lambda: {
      std::size_t n = e.items.size() - 1;
      std::string params = emit_params(e.items, n);
      return "lambda" + (params.empty() ? std::string() : " " + params) + ": " + emit(e.items.back(), kLambda);
    }
    case ExprKind::Param:
      return emit_params({e}, 1);
    case ExprKind::NamedExpr:
      return emit(e.items[0], kAtom) + " := " + emit(e.items[1], kLambda);
    case ExprKind::Yield:
      return e.items.empty() || e.items[0].absent() ? "yield" : "yield " + emit(e.items[0], kTuple);
    case ExprKind::YieldFrom:
      return "yield from " + emit(e.items[0], kLambda);
    case ExprKind::Await:
      return "await " + emit(e.items[0], kAtom);
  }
  return "";
}

std::string emit(const Expr& e, int min_prec) {
  std::string s = emit_raw(e);
  if (e.kind != ExprKind::Absent && precedence(e) < min_prec) return "(" + s + ")";
  return s;
}

// Loop targets keep the parenthesised tuple form.
std::string emit_for_target(const Expr& target) {
  if (target.kind == ExprKind::Tuple && !target.items.empty()) return "(" + emit_raw(target) + ")";
  return emit(target, kBitOr);
}

void emit_block(std::ostringstream& os, const std::vector<Stmt>& body, int indent);

void emit_stmt(std::ostringstream& os, const Stmt& s, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
  for (const auto& d : s.decorators) os << pad << "@" << emit(d, kNamed) << "\n";
  switch (s.kind) {
    case StmtKind::Expr:
      os << pad << emit(s.value, kTuple) << "\n";
      return;
    case StmtKind::Assign: {
      os << pad;
      for (const auto& t : s.targets) os << emit(t, kTuple) << " = ";
      os << emit(s.value, kTuple) << "\n";
      return;
    }
    case StmtKind::AugAssign:
      os << pad << emit(s.targets[0], kTuple) << " " << s.text << "= " << emit(s.value, kTuple) << "\n";
      return;
    case StmtKind::AnnAssign:
      os << pad << emit(s.targets[0], kBitOr) << ": " << emit(s.extra, kLambda);
      if (!s.value.absent()) os << " = " << emit(s.value, kTuple);
      os << "\n";
      return;
    case StmtKind::Pass:
      os << pad << "pass\n";
      return;
    case StmtKind::Break:
      os << pad << "break\n";
      return;
    case StmtKind::Continue:
      os << pad << "continue\n";
      return;
    case StmtKind::Return:
      os << pad << "return";
      if (!s.value.absent()) os << " " << emit(s.value, kTuple);
      os << "\n";
      return;
    case StmtKind::Raise:
      os << pad << "raise";
      if (!s.value.absent()) os << " " << emit(s.value, kLambda);
      if (!s.extra.absent()) os << " from " << emit(s.extra, kLambda);
      os << "\n";
      return;
    case StmtKind::Global:
    case StmtKind::Nonlocal: {
      os << pad << (s.kind == StmtKind::Global ? "global " : "nonlocal ");
      for (std::size_t k = 0; k < s.names.size(); ++k) os << (k ? ", " : "") << s.names[k];
      os << "\n";
      return;
    }
    case StmtKind::Del:
      os << pad << "del " << join(s.targets, 0, kBitOr) << "\n";
      return;
    case StmtKind::Assert:
      os << pad << "assert " << emit(s.value, kLambda);
      if (!s.extra.absent()) os << ", " << emit(s.extra, kLambda);
      os << "\n";
      return;
    case StmtKind::Import:
      os << pad << s.text << "\n";
      return;
    case StmtKind::If: {
      os << pad << "if " << emit(s.value, kNamed) << ":\n";
      emit_block(os, s.body, indent + 1);
      const Stmt* cur = &s;
      while (cur->orelse.size() == 1 && cur->orelse[0].kind == StmtKind::If && cur->orelse[0].decorators.empty()) {
        cur = &cur->orelse[0];
        os << pad << "elif " << emit(cur->value, kNamed) << ":\n";
        emit_block(os, cur->body, indent + 1);
      }
      if (!cur->orelse.empty()) {
        os << pad << "else:\n";
        emit_block(os, cur->orelse, indent + 1);
      }
      return;
    }
    case StmtKind::While:
      os << pad << "while " << emit(s.value, kNamed) << ":\n";
      emit_block(os, s.body, indent + 1);
      if (!s.orelse.empty()) {
        os << pad << "else:\n";
        emit_block(os, s.orelse, indent + 1);
      }
      return;
    case StmtKind::For:
      os << pad << "for " << emit_for_target(s.targets[0]) << " in " << emit(s.value, kTuple) << ":\n";
      emit_block(os, s.body, indent + 1);
      if (!s.orelse.empty()) {
        os << pad << "else:\n";
        emit_block(os, s.orelse, indent + 1);
      }
      return;
    case StmtKind::Try:
      os << pad << "try:\n";
      emit_block(os, s.body, indent + 1);
      for (const auto& h : s.handlers) emit_stmt(os, h, indent);
      if (!s.orelse.empty()) {
        os << pad << "else:\n";
        emit_block(os, s.orelse, indent + 1);
      }
      if (!s.finalbody.empty()) {
        os << pad << "finally:\n";
        emit_block(os, s.finalbody, indent + 1);
      }
      return;
    case StmtKind::ExceptHandler:
      os << pad << "except";
      if (!s.value.absent()) os << " " << emit(s.value, kLambda);
      if (!s.text.empty()) os << " as " << s.text;
      os << ":\n";
      emit_block(os, s.body, indent + 1);
      return;
    case StmtKind::With: {
      os << pad << "with ";
      for (std::size_t k = 0; k < s.targets.size(); ++k) {
        const Expr& item = s.targets[k];
        os << (k ? ", " : "") << emit(item.items[0], kLambda);
        if (!item.items[1].absent()) os << " as " << emit(item.items[1], kBitOr);
      }
      os << ":\n";
      emit_block(os, s.body, indent + 1);
      return;
    }
    case StmtKind::FunctionDef:
      os << pad << "def " << s.text << "(" << emit_params(s.params, s.params.size()) << ")";
      if (!s.extra.absent()) os << " -> " << emit(s.extra, kLambda);
      os << ":\n";
      emit_block(os, s.body, indent + 1);
      return;
    case StmtKind::ClassDef:
      os << pad << "class " << s.text;
      if (!s.params.empty()) os << "(" << join(s.params, 0, kLambda) << ")";
      os << ":\n";
      emit_block(os, s.body, indent + 1);
      return;
  }
}

void emit_block(std::ostringstream& os, const std::vector<Stmt>& body, int indent) {
  if (body.empty()) {
    os << std::string(static_cast<std::size_t>(indent) * 4, ' ') << "pass\n";
    return;
  }
  for (const auto& s : body) emit_stmt(os, s, indent);
}

void walk_block_exprs(const std::vector<Stmt>& block, const std::function<void(const Expr&)>& fn, bool nested) {
  for (const auto& s : block) walk_exprs(s, fn, nested);
}

void import_bound(const std::string& text, std::vector<std::string>& out) {
  // "import a.b as c, d" or "from m import x as y, z"
  std::string clause = text;
  bool from = clause.rfind("from ", 0) == 0;
  if (from) {
    auto pos = clause.find(" import ");
    clause = clause.substr(pos + 8);
  } else {
    clause = clause.substr(7);
  }
  std::stringstream ss(clause);
  std::string part;
  while (std::getline(ss, part, ',')) {
    while (!part.empty() && part.front() == ' ') part.erase(part.begin());
    if (part == "*" || part.empty()) continue;
    auto as = part.find(" as ");
    if (as != std::string::npos) {
      out.push_back(part.substr(as + 4));
    } else if (from) {
      out.push_back(part);
    } else {
      out.push_back(part.substr(0, part.find('.')));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API

Module parse(std::string_view source) {
  Tokenizer tk(source);
  Parser p(tk.run());
  return p.parse_module();
}

Expr parse_expr(std::string_view source) {
  Tokenizer tk(source);
  Parser p(tk.run());
  return p.parse_single_expr();
}

std::string render(const Module& module) {
  std::ostringstream os;
  for (const auto& s : module) emit_stmt(os, s, 0);
  return os.str();
}

std::string render(const Stmt& stmt, int indent) {
  std::ostringstream os;
  emit_stmt(os, stmt, indent);
  return os.str();
}

std::string render(const Expr& expr) { return emit(expr, kTuple); }

Expr make_name(std::string id) {
  Expr e;
  e.kind = ExprKind::Name;
  e.text = std::move(id);
  return e;
}

Expr make_constant(std::string literal) {
  Expr e;
  e.kind = ExprKind::Constant;
  e.text = std::move(literal);
  return e;
}

Expr make_node(ExprKind kind, std::vector<Expr> items, std::string text) {
  Expr e;
  e.kind = kind;
  e.items = std::move(items);
  e.text = std::move(text);
  return e;
}

bool same(const Expr& a, const Expr& b) { return emit(a, kTuple) == emit(b, kTuple); }

void walk(const Expr& expr, const std::function<void(const Expr&)>& fn) {
  fn(expr);
  for (const auto& c : expr.items) walk(c, fn);
}

void walk(Expr& expr, const std::function<void(Expr&)>& fn) {
  fn(expr);
  for (auto& c : expr.items) walk(c, fn);
}

std::vector<const Expr*> own_exprs(const Stmt& s) {
  std::vector<const Expr*> out;
  for (const auto& d : s.decorators) out.push_back(&d);
  for (const auto& t : s.targets) out.push_back(&t);
  if (!s.value.absent()) out.push_back(&s.value);
  if (!s.extra.absent()) out.push_back(&s.extra);
  for (const auto& p : s.params) out.push_back(&p);
  return out;
}

std::vector<Expr*> own_exprs(Stmt& s) {
  std::vector<Expr*> out;
  for (auto& d : s.decorators) out.push_back(&d);
  for (auto& t : s.targets) out.push_back(&t);
  if (!s.value.absent()) out.push_back(&s.value);
  if (!s.extra.absent()) out.push_back(&s.extra);
  for (auto& p : s.params) out.push_back(&p);
  return out;
}

void walk_exprs(const Stmt& stmt, const std::function<void(const Expr&)>& fn, bool into_nested_scopes) {
  for (const Expr* e : own_exprs(stmt)) walk(*e, fn);
  bool nested = stmt.kind == StmtKind::FunctionDef || stmt.kind == StmtKind::ClassDef;
  if (nested && !into_nested_scopes) return;
  walk_block_exprs(stmt.body, fn, into_nested_scopes);
  walk_block_exprs(stmt.orelse, fn, into_nested_scopes);
  walk_block_exprs(stmt.handlers, fn, into_nested_scopes);
  walk_block_exprs(stmt.finalbody, fn, into_nested_scopes);
}

void walk_exprs(const Module& module, const std::function<void(const Expr&)>& fn, bool into_nested_scopes) {
  walk_block_exprs(module, fn, into_nested_scopes);
}

void walk_stmts(const Module& module, const std::function<void(const Stmt&)>& fn, bool into_nested_scopes) {
  for (const auto& s : module) {
    fn(s);
    bool nested = s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef;
    if (nested && !into_nested_scopes) continue;
    walk_stmts(s.body, fn, into_nested_scopes);
    walk_stmts(s.orelse, fn, into_nested_scopes);
    walk_stmts(s.handlers, fn, into_nested_scopes);
    walk_stmts(s.finalbody, fn, into_nested_scopes);
  }
}

bool mentions(const Expr& expr, std::string_view name) {
  bool found = false;
  walk(expr, [&](const Expr& e) {
    if ((e.kind == ExprKind::Name || e.kind == ExprKind::Param) && e.text == name) found = true;
  });
  return found;
}

bool mentions(const Stmt& stmt, std::string_view name) {
  bool found = false;
  walk_exprs(stmt, [&](const Expr& e) {
    if ((e.kind == ExprKind::Name || e.kind == ExprKind::Param) && e.text == name) found = true;
  });
  if (found) return true;
  bool by_stmt = false;
  walk_stmts({stmt}, [&](const Stmt& s) {
    if ((s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef) && s.text == name) by_stmt = true;
    if (s.kind == StmtKind::ExceptHandler && s.text == name) by_stmt = true;
    if ((s.kind == StmtKind::Global || s.kind == StmtKind::Nonlocal) &&
        std::find(s.names.begin(), s.names.end(), name) != s.names.end()) {
      by_stmt = true;
    }
    if (s.kind == StmtKind::Import) {
      std::vector<std::string> names;
      import_bound(s.text, names);
      if (std::find(names.begin(), names.end(), name) != names.end()) by_stmt = true;
    }
  });
  return by_stmt;
}

bool mentions(const Module& block, std::string_view name) {
  return std::any_of(block.begin(), block.end(), [&](const Stmt& s) { return mentions(s, name); });
}

void target_names(const Expr& target, std::vector<std::string>& out) {
  switch (target.kind) {
    case ExprKind::Name:
      out.push_back(target.text);
      break;
    case ExprKind::Tuple:
    case ExprKind::List:
      for (const auto& t : target.items) target_names(t, out);
      break;
    case ExprKind::Starred:
      target_names(target.items[0], out);
      break;
    default:
      break;
  }
}

std::vector<std::string> bound_names(const Module& block) {
  std::vector<std::string> out;
  std::function<void(const std::vector<Stmt>&)> visit = [&](const std::vector<Stmt>& stmts) {
    for (const auto& s : stmts) {
      switch (s.kind) {
        case StmtKind::Assign:
        case StmtKind::AugAssign:
        case StmtKind::AnnAssign:
        case StmtKind::For:
          for (const auto& t : s.targets) target_names(t, out);
          break;
        case StmtKind::With:
          for (const auto& item : s.targets) {
            if (!item.items[1].absent()) target_names(item.items[1], out);
          }
          break;
        case StmtKind::Import:
          import_bound(s.text, out);
          break;
        case StmtKind::FunctionDef:
        case StmtKind::ClassDef:
          out.push_back(s.text);
          continue;
        case StmtKind::ExceptHandler:
          if (!s.text.empty()) out.push_back(s.text);
          break;
        default:
          break;
      }
      visit(s.body);
      visit(s.orelse);
      visit(s.handlers);
      visit(s.finalbody);
    }
  };
  visit(block);
  std::vector<std::string> unique;
  for (auto& n : out) {
    if (std::find(unique.begin(), unique.end(), n) == unique.end()) unique.push_back(n);
  }
  return unique;
}

std::vector<std::string> identifiers(const Module& module) {
  std::set<std::string> ids;
  walk_exprs(module, [&](const Expr& e) {
    if (e.kind == ExprKind::Name || e.kind == ExprKind::Param) ids.insert(e.text);
  });
  walk_stmts(module, [&](const Stmt& s) {
    if (s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef) ids.insert(s.text);
    if (s.kind == StmtKind::ExceptHandler && !s.text.empty()) ids.insert(s.text);
    for (const auto& n : s.names) ids.insert(n);
    if (s.kind == StmtKind::Import) {
      std::vector<std::string> names;
      import_bound(s.text, names);
      ids.insert(names.begin(), names.end());
    }
  });
  return {ids.begin(), ids.end()};
}

}  // namespace idiomperf::py
