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

#pragma once

/// \file
/// A parser and printer for the subset of Python 3 source that the idiom
/// toolkit reads and writes. The tree is deliberately uniform: every
/// expression is an `Expr` whose children live in `items`, and every
/// statement is a `Stmt`. Formatting and comments are not preserved;
/// `render()` emits a canonical form with four-space indentation.

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace idiomperf::py {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int col);
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

enum class ExprKind {
  Absent,  // placeholder for an optional child (slice bound, `**` dict key)
  Name,
  Constant,  // `text` holds the literal exactly as written
  Tuple,
  List,
  Set,
  Dict,  // items alternate key, value
  ListComp,  // items: elt, CompFor...
  SetComp,
  DictComp,  // items: key, value, CompFor...
  GeneratorExp,
  CompFor,  // items: target, iter, if...
  BoolOp,  // text: "and" | "or"
  BinOp,  // text: operator, items: left, right
  UnaryOp,  // text: "not" | "-" | "+" | "~"
  Compare,  // ops: operators, items: left, comparators...
  IfExp,  // items: test, body, orelse
  Call,  // items: func, args... (Starred / Keyword / plain, in source order)
  Keyword,  // text: name, or empty for `**value`
  Attribute,  // text: attr, items: value
  Subscript,  // items: value, index
  Slice,  // items: lower, upper, step (each may be Absent)
  Starred,  // items: value
  Lambda,  // params..., body is the last item
  Param,  // text: name, ops[0]: "", "*", "**" or "/" marker; items: annotation, default
  NamedExpr,  // items: target, value
  Yield,  // items: value (may be Absent)
  YieldFrom,
  Await,
};

struct Expr {
  ExprKind kind = ExprKind::Absent;
  std::string text;
  std::vector<std::string> ops;
  std::vector<Expr> items;
  int line = 0;
  int col = 0;

  bool absent() const { return kind == ExprKind::Absent; }
};

enum class StmtKind {
  Expr,
  Assign,  // targets = a = b = value
  AugAssign,  // text: operator without '='
  AnnAssign,  // targets[0]: annotation target, extra: annotation, value maybe Absent
  Pass,
  Break,
  Continue,
  Return,
  Raise,  // value: exception, extra: cause
  Global,
  Nonlocal,
  Del,
  Assert,  // value: test, extra: message
  Import,  // text: canonical import statement
  If,
  While,
  For,
  Try,  // body, handlers, orelse, finalbody
  ExceptHandler,  // value: type, text: as-name
  With,  // targets: WithItem pairs encoded as Tuple(ctx, var)
  FunctionDef,  // text: name, params, extra: return annotation
  ClassDef,  // text: name, params: bases/keywords
};

struct Stmt {
  StmtKind kind = StmtKind::Pass;
  std::string text;
  std::vector<std::string> names;  // Global / Nonlocal
  std::vector<Expr> targets;
  Expr value;
  Expr extra;
  std::vector<Expr> params;
  std::vector<Expr> decorators;
  std::vector<Stmt> body;
  std::vector<Stmt> orelse;
  std::vector<Stmt> handlers;
  std::vector<Stmt> finalbody;
  int line = 0;
  int end_line = 0;
};

using Module = std::vector<Stmt>;

/// Parses a module. Throws ParseError on anything outside the supported
/// grammar (async constructs, match statements, decorators on non-defs).
Module parse(std::string_view source);

/// Parses a single expression (the whole input must be one expression).
Expr parse_expr(std::string_view source);

std::string render(const Module& module);
std::string render(const Stmt& stmt, int indent = 0);
std::string render(const Expr& expr);

// Construction helpers.
Expr make_name(std::string id);
Expr make_constant(std::string literal);
Expr make_node(ExprKind kind, std::vector<Expr> items, std::string text = {});

/// Structural equality through the canonical rendering.
bool same(const Expr& a, const Expr& b);

// Traversal. Visitors see every node in pre-order; statement visitors do
// not descend into nested function or class bodies unless asked.
void walk(const Expr& expr, const std::function<void(const Expr&)>& fn);
void walk(Expr& expr, const std::function<void(Expr&)>& fn);
void walk_exprs(const Stmt& stmt, const std::function<void(const Expr&)>& fn,
                bool into_nested_scopes = true);
void walk_exprs(const Module& module, const std::function<void(const Expr&)>& fn,
                bool into_nested_scopes = true);
void walk_stmts(const Module& module, const std::function<void(const Stmt&)>& fn,
                bool into_nested_scopes = true);

/// Direct expression children of a statement (not its sub-blocks).
std::vector<const Expr*> own_exprs(const Stmt& stmt);
std::vector<Expr*> own_exprs(Stmt& stmt);

/// True if `name` occurs anywhere (load or store) inside the expression.
bool mentions(const Expr& expr, std::string_view name);
bool mentions(const Stmt& stmt, std::string_view name);
bool mentions(const Module& block, std::string_view name);

/// Names bound at the top level of a block: assignment and loop targets,
/// imports, function and class definitions. Does not enter nested scopes.
std::vector<std::string> bound_names(const Module& block);

/// Names bound by an assignment target expression (tuples and starred unpacked).
void target_names(const Expr& target, std::vector<std::string>& out);

/// Every identifier appearing in the source, in any role.
std::vector<std::string> identifiers(const Module& module);

}  // namespace idiomperf::py
