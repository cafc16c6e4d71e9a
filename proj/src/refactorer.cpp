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

#include "idiomperf/refactorer.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "idiomperf/pyast.hpp"

namespace idiomperf {

namespace {

using py::Expr;
using py::ExprKind;
using py::Stmt;
using py::StmtKind;

// ---------------------------------------------------------------------------
// Small predicates

bool is_name(const Expr& e, std::string_view id = {}) {
  return e.kind == ExprKind::Name && (id.empty() || e.text == id);
}

const std::string* single_name_target(const Stmt& s) {
  if (s.kind != StmtKind::Assign || s.targets.size() != 1 || !is_name(s.targets[0])) return nullptr;
  return &s.targets[0].text;
}

std::optional<std::int64_t> literal_int(const Expr& e) {
  if (e.kind == ExprKind::Constant && !e.text.empty() &&
      std::all_of(e.text.begin(), e.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    if (e.text.size() > 1 && e.text[0] == '0') return std::nullopt;
    if (e.text.size() > 17) return std::nullopt;
    return std::stoll(e.text);
  }
  if (e.kind == ExprKind::UnaryOp && e.text == "-" && !e.items.empty()) {
    if (auto v = literal_int(e.items[0])) return -*v;
  }
  return std::nullopt;
}

std::optional<std::int64_t> int_value(const Expr& e, const RefactorContext& ctx) {
  if (auto v = literal_int(e)) return v;
  if (is_name(e)) {
    auto it = ctx.int_constants.find(e.text);
    if (it != ctx.int_constants.end()) return it->second;
  }
  return std::nullopt;
}

// Free of calls and other constructs that run arbitrary code or bind names.
bool is_simple(const Expr& e) {
  bool ok = true;
  py::walk(e, [&](const Expr& x) {
    switch (x.kind) {
      case ExprKind::Call:
      case ExprKind::Yield:
      case ExprKind::YieldFrom:
      case ExprKind::Await:
      case ExprKind::NamedExpr:
      case ExprKind::Lambda:
      case ExprKind::ListComp:
      case ExprKind::SetComp:
      case ExprKind::DictComp:
      case ExprKind::GeneratorExp:
      case ExprKind::Starred:
        ok = false;
        break;
      default:
        break;
    }
  });
  return ok;
}

// Safe to evaluate twice or once: names, literals and plain accesses.
bool is_pure(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Name:
    case ExprKind::Constant:
    case ExprKind::Absent:
      return true;
    case ExprKind::Attribute:
      return is_pure(e.items[0]);
    case ExprKind::Subscript:
    case ExprKind::Slice:
    case ExprKind::Tuple:
      return std::all_of(e.items.begin(), e.items.end(), is_pure);
    case ExprKind::UnaryOp:
      return e.text != "not" && is_pure(e.items[0]);
    default:
      return false;
  }
}

bool is_empty_value(const Expr& e) {
  static const std::set<std::string> extra = {"\"\"", "dict()", "set()", "Decimal(0)", "Fraction(0, 1)"};
  std::string r = py::render(e);
  return std::find(kEmptySet.begin(), kEmptySet.end(), r) != kEmptySet.end() || extra.count(r) > 0;
}

std::string stmt_snippet(const std::vector<Stmt>& stmts) {
  std::string out;
  for (const auto& s : stmts) out += py::render(s);
  return out;
}

// ---------------------------------------------------------------------------
// Rule outcome

struct Outcome {
  enum Kind { NoMatch, Rejected, Match } kind = NoMatch;
  IdiomKind idiom = IdiomKind::ListComprehension;
  std::string reason;
  std::size_t consumed = 0;  // statements claimed (claiming rules only)
  std::vector<Stmt> replacement;
  int first_line = 0;
  int last_line = 0;
  std::string snippet;

  static Outcome none() { return {}; }
  static Outcome reject(IdiomKind k, std::string why) {
    Outcome o;
    o.kind = Rejected;
    o.idiom = k;
    o.reason = std::move(why);
    return o;
  }
};

// Where a site sits: used to decide whether names it binds are read later.
struct ScopeView {
  const std::vector<Stmt>* root = nullptr;
  // Line span of the outermost loop in this scope enclosing the site (0 if none).
  int loop_first = 0;
  int loop_last = 0;
};

bool stmt_mentions_own(const Stmt& s, const std::string& name) {
  for (const Expr* e : py::own_exprs(s)) {
    if (py::mentions(*e, name)) return true;
  }
  if ((s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef) && s.text == name) return true;
  if (s.kind == StmtKind::ExceptHandler && s.text == name) return true;
  if ((s.kind == StmtKind::Global || s.kind == StmtKind::Nonlocal) &&
      std::find(s.names.begin(), s.names.end(), name) != s.names.end()) {
    return true;
  }
  return false;
}

// True if `name` may be read after the site spanning [first, last] runs.
bool used_outside(const ScopeView& scope, const std::string& name, int first, int last) {
  bool used = false;
  py::walk_stmts(*scope.root, [&](const Stmt& s) {
    if (used || !stmt_mentions_own(s, name)) return;
    bool after = s.line > last;
    bool in_loop = scope.loop_first > 0 && s.line >= scope.loop_first && s.line <= scope.loop_last &&
                   (s.line < first || s.line > last);
    if (after || in_loop) used = true;
  });
  return used;
}

// ---------------------------------------------------------------------------
// Comprehensions

struct CompShape {
  IdiomKind idiom;
  std::string acc;
};

std::optional<CompShape> accumulator(const Stmt& s) {
  const std::string* name = single_name_target(s);
  if (name == nullptr) return std::nullopt;
  const Expr& v = s.value;
  if (v.kind == ExprKind::List && v.items.empty()) return CompShape{IdiomKind::ListComprehension, *name};
  if (v.kind == ExprKind::Dict && v.items.empty()) return CompShape{IdiomKind::DictComprehension, *name};
  if (v.kind == ExprKind::Call && v.items.size() == 1 && is_name(v.items[0])) {
    if (v.items[0].text == "set") return CompShape{IdiomKind::SetComprehension, *name};
    if (v.items[0].text == "dict") return CompShape{IdiomKind::DictComprehension, *name};
  }
  return std::nullopt;
}

struct Leaf {
  Expr key;  // dict only
  Expr value;
};

std::optional<Leaf> comp_leaf(const Stmt& s, const CompShape& shape) {
  if (shape.idiom == IdiomKind::DictComprehension) {
    if (s.kind != StmtKind::Assign || s.targets.size() != 1) return std::nullopt;
    const Expr& t = s.targets[0];
    if (t.kind != ExprKind::Subscript || !is_name(t.items[0], shape.acc) || t.items[1].kind == ExprKind::Slice) {
      return std::nullopt;
    }
    return Leaf{t.items[1], s.value};
  }
  std::string method = shape.idiom == IdiomKind::ListComprehension ? "append" : "add";
  if (s.kind != StmtKind::Expr || s.value.kind != ExprKind::Call) return std::nullopt;
  const Expr& call = s.value;
  if (call.items.size() != 2) return std::nullopt;
  const Expr& fn = call.items[0];
  if (fn.kind != ExprKind::Attribute || fn.text != method || !is_name(fn.items[0], shape.acc)) return std::nullopt;
  const Expr& arg = call.items[1];
  if (arg.kind == ExprKind::Starred || arg.kind == ExprKind::Keyword) return std::nullopt;
  return Leaf{Expr{}, arg};
}

// A leaf, or if/else whose branches are both single-statement trees.
std::optional<Leaf> comp_tree(const Stmt& s, const CompShape& shape, std::optional<Expr>& key) {
  if (auto leaf = comp_leaf(s, shape)) {
    if (shape.idiom == IdiomKind::DictComprehension) {
      if (!key) {
        key = leaf->key;
      } else if (!py::same(*key, leaf->key)) {
        return std::nullopt;
      }
    }
    return leaf;
  }
  if (s.kind == StmtKind::If && s.body.size() == 1 && s.orelse.size() == 1) {
    auto body = comp_tree(s.body[0], shape, key);
    auto orelse = comp_tree(s.orelse[0], shape, key);
    if (!body || !orelse) return std::nullopt;
    return Leaf{Expr{}, py::make_node(ExprKind::IfExp, {s.value, body->value, orelse->value})};
  }
  return std::nullopt;
}

Outcome comprehension(const std::vector<Stmt>& block, std::size_t i, const ScopeView& scope) {
  auto shape = accumulator(block[i]);
  if (!shape || i + 1 >= block.size() || block[i + 1].kind != StmtKind::For) return Outcome::none();
  const Stmt& loop = block[i + 1];
  IdiomKind k = shape->idiom;
  if (!loop.orelse.empty()) return Outcome::reject(k, "loop has an else clause");

  std::vector<Expr> gens;
  const Stmt* cur = &loop;
  std::optional<Leaf> leaf;
  std::optional<Expr> key;
  while (true) {
    if (cur->kind == StmtKind::For && cur->orelse.empty()) {
      gens.push_back(py::make_node(ExprKind::CompFor, {cur->targets[0], cur->value}));
    } else if (cur->kind == StmtKind::If && cur->orelse.empty() && !gens.empty()) {
      gens.back().items.push_back(cur->value);
    } else {
      leaf = comp_tree(*cur, *shape, key);
      break;
    }
    if (cur->body.size() != 1) return Outcome::reject(k, "loop body does more than accumulate");
    cur = &cur->body[0];
  }
  if (!leaf) return Outcome::reject(k, "loop body does more than accumulate");

  for (const auto& g : gens) {
    for (std::size_t j = 1; j < g.items.size(); ++j) {
      if (py::mentions(g.items[j], shape->acc)) return Outcome::reject(k, "accumulator read inside the loop");
    }
  }
  if (py::mentions(leaf->value, shape->acc) || (key && py::mentions(*key, shape->acc))) {
    return Outcome::reject(k, "accumulator read inside the loop");
  }
  if (key && !is_pure(*key)) return Outcome::reject(k, "dictionary key has side effects");
  for (const auto& g : gens) {
    std::vector<std::string> names;
    py::target_names(g.items[0], names);
    for (const auto& n : names) {
      if (n == shape->acc) return Outcome::reject(k, "loop target shadows the accumulator");
      if (used_outside(scope, n, block[i].line, loop.end_line)) {
        return Outcome::reject(k, "loop variable '" + n + "' is read after the loop");
      }
    }
  }

  std::vector<Expr> items;
  if (k == IdiomKind::DictComprehension) items.push_back(*key);
  items.push_back(leaf->value);
  for (auto& g : gens) items.push_back(std::move(g));
  ExprKind comp = k == IdiomKind::ListComprehension  ? ExprKind::ListComp
                  : k == IdiomKind::SetComprehension ? ExprKind::SetComp
                                                     : ExprKind::DictComp;
  Stmt out = block[i];
  out.value = py::make_node(comp, std::move(items));
  out.end_line = loop.end_line;

  Outcome o;
  o.kind = Outcome::Match;
  o.idiom = k;
  o.consumed = 2;
  o.first_line = block[i].line;
  o.last_line = loop.end_line;
  o.snippet = stmt_snippet({block[i], loop});
  o.replacement.push_back(std::move(out));
  return o;
}

// ---------------------------------------------------------------------------
// Loop else

// Break statements that leave `loop` itself (nested loops excluded).
void own_breaks(const std::vector<Stmt>& body, int& count) {
  for (const auto& s : body) {
    if (s.kind == StmtKind::Break) ++count;
    if (s.kind == StmtKind::For || s.kind == StmtKind::While) {
      own_breaks(s.orelse, count);
      continue;
    }
    if (s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef) continue;
    own_breaks(s.body, count);
    own_breaks(s.orelse, count);
    own_breaks(s.handlers, count);
    own_breaks(s.finalbody, count);
  }
}

std::optional<bool> bool_constant(const Expr& e) {
  if (e.kind != ExprKind::Constant) return std::nullopt;
  if (e.text == "True") return true;
  if (e.text == "False") return false;
  return std::nullopt;
}

Outcome loop_else(const std::vector<Stmt>& block, std::size_t i, const ScopeView& scope) {
  const IdiomKind k = IdiomKind::LoopElse;
  const std::string* flag = single_name_target(block[i]);
  if (flag == nullptr) return Outcome::none();
  auto initial = bool_constant(block[i].value);
  if (!initial) return Outcome::none();

  std::size_t j = i + 1;
  while (j < block.size() && block[j].kind != StmtKind::For && block[j].kind != StmtKind::While) {
    if (py::mentions(block[j], *flag)) return Outcome::none();
    ++j;
  }
  if (j + 1 >= block.size()) return Outcome::none();
  const Stmt& loop = block[j];
  const Stmt& test = block[j + 1];
  if (test.kind != StmtKind::If) return Outcome::none();
  bool positive;
  if (is_name(test.value, *flag)) {
    positive = true;
  } else if (test.value.kind == ExprKind::UnaryOp && test.value.text == "not" && is_name(test.value.items[0], *flag)) {
    positive = false;
  } else {
    return Outcome::none();
  }
  if (!loop.orelse.empty()) return Outcome::reject(k, "loop already has an else clause");
  for (const Expr* e : py::own_exprs(loop)) {
    if (py::mentions(*e, *flag)) return Outcome::reject(k, "flag read by the loop header");
  }

  // Locate `if cond: ... flag = <not initial> ... break` directly in the body.
  std::optional<std::size_t> hit;
  std::size_t assign_at = 0;
  for (std::size_t b = 0; b < loop.body.size(); ++b) {
    const Stmt& s = loop.body[b];
    if (!py::mentions(s, *flag)) continue;
    if (hit || s.kind != StmtKind::If || !s.orelse.empty() || s.body.empty() ||
        s.body.back().kind != StmtKind::Break) {
      return Outcome::reject(k, "flag used outside a single breaking branch");
    }
    int setters = 0;
    for (std::size_t a = 0; a < s.body.size(); ++a) {
      const Stmt& inner = s.body[a];
      const std::string* target = single_name_target(inner);
      if (target != nullptr && *target == *flag && bool_constant(inner.value) == std::optional<bool>(!*initial)) {
        ++setters;
        assign_at = a;
      } else if (py::mentions(inner, *flag)) {
        return Outcome::reject(k, "flag used outside a single breaking branch");
      }
    }
    if (setters != 1 || py::mentions(s.value, *flag)) {
      return Outcome::reject(k, "flag used outside a single breaking branch");
    }
    hit = b;
  }
  if (!hit) return Outcome::reject(k, "loop never clears the flag");
  int breaks = 0;
  own_breaks(loop.body, breaks);
  if (breaks != 1) return Outcome::reject(k, "loop has other break statements");
  if (used_outside(scope, *flag, block[i].line, test.end_line)) {
    return Outcome::reject(k, "flag is read after the check");
  }

  bool nobreak_is_body = positive == *initial;
  std::vector<Stmt> nobreak = nobreak_is_body ? test.body : test.orelse;
  std::vector<Stmt> broken = nobreak_is_body ? test.orelse : test.body;
  if (nobreak.empty()) return Outcome::reject(k, "nothing runs when the loop completes");

  Stmt out = loop;
  Stmt& branch = out.body[*hit];
  branch.body.erase(branch.body.begin() + static_cast<std::ptrdiff_t>(assign_at));
  branch.body.insert(branch.body.end() - 1, broken.begin(), broken.end());
  out.orelse = std::move(nobreak);
  out.end_line = test.end_line;

  Outcome o;
  o.kind = Outcome::Match;
  o.idiom = k;
  o.consumed = j + 2 - i;
  o.first_line = block[i].line;
  o.last_line = test.end_line;
  o.snippet = stmt_snippet(std::vector<Stmt>(block.begin() + static_cast<std::ptrdiff_t>(i),
                                             block.begin() + static_cast<std::ptrdiff_t>(j + 2)));
  for (std::size_t m = i + 1; m < j; ++m) o.replacement.push_back(block[m]);
  o.replacement.push_back(std::move(out));
  return o;
}

// ---------------------------------------------------------------------------
// Assign multiple targets

Outcome tuple_assign(const std::vector<Stmt>& stmts, std::vector<Expr> targets, std::vector<Expr> values) {
  Stmt out = stmts.front();
  out.targets = {py::make_node(ExprKind::Tuple, std::move(targets))};
  out.value = py::make_node(ExprKind::Tuple, std::move(values));
  out.end_line = stmts.back().end_line;
  Outcome o;
  o.kind = Outcome::Match;
  o.idiom = IdiomKind::AssignMultiTargets;
  o.consumed = stmts.size();
  o.first_line = stmts.front().line;
  o.last_line = stmts.back().end_line;
  o.snippet = stmt_snippet(stmts);
  o.replacement.push_back(std::move(out));
  return o;
}

// t = x0; x0 = x1; ...; x(n-1) = t  ->  x0, ..., x(n-1) = x1, ..., x(n-1), x0
Outcome rotation(const std::vector<Stmt>& block, std::size_t i, const ScopeView& scope) {
  const std::string* temp = single_name_target(block[i]);
  if (temp == nullptr || !is_name(block[i].value) || block[i].value.text == *temp) return Outcome::none();
  std::vector<std::string> chain{block[i].value.text};
  std::size_t k = i + 1;
  bool closed = false;
  for (; k < block.size(); ++k) {
    const std::string* target = single_name_target(block[k]);
    if (target == nullptr || *target != chain.back() || !is_name(block[k].value)) return Outcome::none();
    const std::string& src = block[k].value.text;
    if (src == *temp) {
      closed = true;
      break;
    }
    if (std::find(chain.begin(), chain.end(), src) != chain.end()) return Outcome::none();
    chain.push_back(src);
  }
  if (!closed || chain.size() < 2) return Outcome::none();
  if (used_outside(scope, *temp, block[i].line, block[k].end_line)) {
    return Outcome::reject(IdiomKind::AssignMultiTargets, "temporary is read after the swap");
  }
  std::vector<Expr> targets, values;
  for (std::size_t m = 0; m < chain.size(); ++m) {
    targets.push_back(py::make_name(chain[m]));
    values.push_back(py::make_name(chain[(m + 1) % chain.size()]));
  }
  std::vector<Stmt> stmts(block.begin() + static_cast<std::ptrdiff_t>(i),
                          block.begin() + static_cast<std::ptrdiff_t>(k + 1));
  return tuple_assign(stmts, std::move(targets), std::move(values));
}

Outcome assign_run(const std::vector<Stmt>& block, std::size_t i, const std::vector<bool>& claimed) {
  std::vector<std::string> names;
  std::size_t k = i;
  for (; k < block.size() && !claimed[k]; ++k) {
    const std::string* target = single_name_target(block[k]);
    if (target == nullptr || !is_simple(block[k].value)) break;
    if (std::find(names.begin(), names.end(), *target) != names.end()) break;
    bool reads_earlier = std::any_of(names.begin(), names.end(),
                                     [&](const std::string& n) { return py::mentions(block[k].value, n); });
    if (reads_earlier) break;
    names.push_back(*target);
  }
  if (names.size() < 2) return Outcome::none();
  std::vector<Stmt> stmts(block.begin() + static_cast<std::ptrdiff_t>(i),
                          block.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<Expr> targets, values;
  for (const auto& s : stmts) {
    targets.push_back(s.targets[0]);
    values.push_back(s.value);
  }
  return tuple_assign(stmts, std::move(targets), std::move(values));
}

// ---------------------------------------------------------------------------
// For multiple targets (rewrites in place)

Outcome for_multi(Stmt& s, const ScopeView& scope, const RefactorContext& ctx, const std::set<std::string>& taken,
                  bool apply) {
  const IdiomKind k = IdiomKind::ForMultiTargets;
  if (s.kind != StmtKind::For || !is_name(s.targets[0])) return Outcome::none();
  const std::string var = s.targets[0].text;

  // Every mention must be `var[<non-negative int literal>]` in a load position.
  int bare = 0;
  std::int64_t max_index = -1;
  auto scan = [&](const Expr& root) {
    py::walk(root, [&](const Expr& e) {
      if (e.kind == ExprKind::Subscript && is_name(e.items[0], var)) {
        auto idx = literal_int(e.items[1]);
        if (idx && *idx >= 0) {
          max_index = std::max(max_index, *idx);
          --bare;  // the Name child is visited next and is legitimate
        }
      }
      if (is_name(e, var)) ++bare;
    });
  };
  bool stored = false;
  py::walk_stmts(s.body, [&](const Stmt& inner) {
    for (const Expr* e : py::own_exprs(inner)) scan(*e);
    bool is_store = inner.kind == StmtKind::Assign || inner.kind == StmtKind::AugAssign ||
                    inner.kind == StmtKind::AnnAssign || inner.kind == StmtKind::Del || inner.kind == StmtKind::For;
    if (is_store) {
      for (const auto& t : inner.targets) stored = stored || py::mentions(t, var);
    }
    if (stmt_mentions_own(inner, var) && (inner.kind == StmtKind::FunctionDef || inner.kind == StmtKind::ClassDef ||
                                          inner.kind == StmtKind::ExceptHandler)) {
      stored = true;
    }
  });
  if (max_index < 0) return Outcome::none();
  if (bare > 0 || stored) return Outcome::reject(k, "loop variable is used other than by constant indexing");
  if (!s.orelse.empty() && py::mentions(s.orelse, var)) return Outcome::reject(k, "loop else reads the variable");
  if (used_outside(scope, var, s.line, s.end_line)) return Outcome::reject(k, "loop variable is read after the loop");

  bool starred = true;
  if (ctx.features && ctx.features->idiom == k) {
    starred = ctx.features->flag(dim::kHasStarred);
  } else if (is_name(s.value)) {
    auto it = ctx.element_lengths.find(s.value.text);
    if (it != ctx.element_lengths.end()) {
      if (it->second < max_index + 1) return Outcome::reject(k, "elements are shorter than the accessed index");
      starred = it->second > max_index + 1;
    }
  }
  std::vector<std::string> fresh;
  for (std::int64_t m = 0; m <= max_index; ++m) fresh.push_back(var + "_" + std::to_string(m));
  if (starred) fresh.push_back(var + "_len");
  for (const auto& n : fresh) {
    if (taken.count(n) > 0) return Outcome::reject(k, "name '" + n + "' already in use");
  }

  Outcome o;
  o.kind = Outcome::Match;
  o.idiom = k;
  o.first_line = s.line;
  o.last_line = s.end_line;
  o.snippet = py::render(s);
  if (!apply) return o;

  std::vector<Expr> targets;
  for (std::int64_t m = 0; m <= max_index; ++m) targets.push_back(py::make_name(fresh[static_cast<std::size_t>(m)]));
  if (starred) targets.push_back(py::make_node(ExprKind::Starred, {py::make_name(var + "_len")}));
  s.targets[0] = py::make_node(ExprKind::Tuple, std::move(targets));
  std::function<void(std::vector<Stmt>&)> rewrite = [&](std::vector<Stmt>& body) {
    for (auto& inner : body) {
      for (Expr* e : py::own_exprs(inner)) {
        py::walk(*e, [&](Expr& x) {
          if (x.kind == ExprKind::Subscript && is_name(x.items[0], var)) {
            x = py::make_name(var + "_" + std::to_string(*literal_int(x.items[1])));
          }
        });
      }
      rewrite(inner.body);
      rewrite(inner.orelse);
      rewrite(inner.handlers);
      rewrite(inner.finalbody);
    }
  };
  rewrite(s.body);
  return o;
}

// ---------------------------------------------------------------------------
// Truth value test (rewrites in place)

Outcome truth_test(Stmt& s, bool apply) {
  if (s.kind != StmtKind::If && s.kind != StmtKind::While && s.kind != StmtKind::Assert) return Outcome::none();
  Expr& test = s.value;
  if (test.kind != ExprKind::Compare || test.ops.size() != 1) return Outcome::none();
  const std::string& op = test.ops[0];
  if (op != "==" && op != "!=") return Outcome::none();
  const Expr* operand = nullptr;
  if (is_empty_value(test.items[1])) {
    operand = &test.items[0];
  } else if (is_empty_value(test.items[0])) {
    operand = &test.items[1];
  } else {
    return Outcome::none();
  }
  Outcome o;
  o.kind = Outcome::Match;
  o.idiom = IdiomKind::TruthValueTest;
  o.first_line = s.line;
  o.last_line = s.line;
  o.snippet = py::render(test);
  if (apply) {
    Expr value = *operand;
    test = op == "==" ? py::make_node(ExprKind::UnaryOp, {std::move(value)}, "not") : std::move(value);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Chain comparison (expression level)

std::string flipped(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  if (op == "==" || op == "!=" || op == "is" || op == "is not") return op;
  return {};
}

struct Oriented {
  std::vector<Expr> operands;
  std::vector<std::string> ops;
};

std::optional<Oriented> orient(const Expr& cmp, bool flip) {
  Oriented o{cmp.items, cmp.ops};
  if (!flip) return o;
  std::reverse(o.operands.begin(), o.operands.end());
  std::reverse(o.ops.begin(), o.ops.end());
  for (auto& op : o.ops) {
    op = flipped(op);
    if (op.empty()) return std::nullopt;
  }
  return o;
}

// Longest chain starting at values[i]; returns the merged comparison and its length.
std::pair<Oriented, std::size_t> best_chain(const std::vector<Expr>& values, std::size_t i) {
  Oriented best;
  std::size_t best_len = 0;
  for (bool flip0 : {false, true}) {
    auto first = orient(values[i], flip0);
    if (!first) continue;
    Oriented cur = *first;
    std::size_t len = 1;
    for (std::size_t j = i + 1; j < values.size() && values[j].kind == ExprKind::Compare; ++j) {
      bool linked = false;
      for (bool flip : {false, true}) {
        auto next = orient(values[j], flip);
        if (!next) continue;
        if (!py::same(next->operands.front(), cur.operands.back()) || !is_pure(cur.operands.back())) continue;
        cur.operands.insert(cur.operands.end(), next->operands.begin() + 1, next->operands.end());
        cur.ops.insert(cur.ops.end(), next->ops.begin(), next->ops.end());
        linked = true;
        break;
      }
      if (!linked) break;
      ++len;
    }
    if (len > best_len) {
      best_len = len;
      best = std::move(cur);
    }
  }
  return {best, best_len};
}

int chain_sites(Expr& root, bool apply) {
  int found = 0;
  py::walk(root, [&](Expr& e) {
    if (e.kind != ExprKind::BoolOp || e.text != "and") return;
    std::vector<Expr> values;
    bool changed = false;
    for (std::size_t i = 0; i < e.items.size();) {
      if (e.items[i].kind == ExprKind::Compare) {
        auto [chain, len] = best_chain(e.items, i);
        if (len >= 2) {
          ++found;
          Expr merged = py::make_node(ExprKind::Compare, std::move(chain.operands));
          merged.ops = std::move(chain.ops);
          values.push_back(std::move(merged));
          i += len;
          changed = true;
          continue;
        }
      }
      values.push_back(e.items[i]);
      ++i;
    }
    if (!apply || !changed) return;
    if (values.size() == 1) {
      Expr only = std::move(values[0]);
      e = std::move(only);
    } else {
      e.items = std::move(values);
    }
  });
  return found;
}

// ---------------------------------------------------------------------------
// Star in function call (expression level)

struct StarRun {
  std::size_t begin = 0;  // argument positions in Call.items
  std::size_t end = 0;
  std::string base;
  std::int64_t start = 0;
  std::int64_t stride = 1;
};

std::optional<std::pair<std::string, std::int64_t>> indexed_arg(const Expr& arg, const RefactorContext& ctx,
                                                                bool& unresolved) {
  if (arg.kind != ExprKind::Subscript || !is_name(arg.items[0]) || arg.items[1].kind == ExprKind::Slice) {
    return std::nullopt;
  }
  auto idx = int_value(arg.items[1], ctx);
  if (!idx) {
    unresolved = true;
    return std::nullopt;
  }
  if (*idx < 0) return std::nullopt;
  return std::make_pair(arg.items[0].text, *idx);
}

std::vector<StarRun> star_runs(const Expr& call, const RefactorContext& ctx, bool& unresolved) {
  std::vector<StarRun> runs;
  std::optional<StarRun> cur;
  std::int64_t last = 0;
  std::size_t count = 0;
  auto close = [&] {
    if (cur) runs.push_back(*cur);
    cur.reset();
  };
  for (std::size_t a = 1; a < call.items.size(); ++a) {
    auto hit = indexed_arg(call.items[a], ctx, unresolved);
    if (!hit) {
      close();
      continue;
    }
    if (cur && cur->base == hit->first) {
      std::int64_t step = hit->second - last;
      if ((count == 1 && step > 0) || (count > 1 && step == cur->stride)) {
        cur->stride = step;
        cur->end = a + 1;
        last = hit->second;
        ++count;
        continue;
      }
    }
    close();
    cur = StarRun{a, a + 1, hit->first, hit->second, 1};
    last = hit->second;
    count = 1;
  }
  close();
  return runs;
}

Expr star_argument(const StarRun& run, const RefactorContext& ctx) {
  std::int64_t n = static_cast<std::int64_t>(run.end - run.begin);
  std::int64_t stride = run.stride;
  bool by_features = ctx.features && ctx.features->idiom == IdiomKind::StarInFuncCall &&
                     ctx.features->count(dim::kNumSubscript) == n;
  if (by_features && n == 1 && ctx.features->flag(dim::kHasSubscript) && ctx.features->flag(dim::kHasStep)) {
    stride = 2;
  }
  std::int64_t stop = run.start + (n - 1) * stride + 1;
  std::optional<std::int64_t> length;
  if (auto it = ctx.sequence_lengths.find(run.base); it != ctx.sequence_lengths.end()) length = it->second;

  bool need_lower = run.start > 0;
  bool need_step = n > 1 && stride > 1;
  bool need_upper = true;
  if (length) {
    std::int64_t taken = *length > run.start ? (*length - run.start + stride - 1) / stride : 0;
    need_upper = taken > n;
  }
  bool lower = need_lower, upper = need_upper, step = need_step;
  bool sliced = lower || upper || step;
  if (by_features) {
    const auto& f = *ctx.features;
    bool f_sliced = f.flag(dim::kHasSubscript);
    bool f_lower = f_sliced && f.flag(dim::kHasLower);
    bool f_upper = f_sliced && f.flag(dim::kHasUpper);
    bool f_step = f_sliced && f.flag(dim::kHasStep);
    // Feature flags may add components, never drop a needed one.
    if ((f_lower || !need_lower) && (f_upper || !need_upper) && (f_step || !need_step) && (f_sliced || !sliced)) {
      lower = f_lower;
      upper = f_upper;
      step = f_step;
      sliced = f_sliced;
    }
  }
  Expr base = py::make_name(run.base);
  if (!sliced) return py::make_node(ExprKind::Starred, {std::move(base)});
  Expr slice = py::make_node(ExprKind::Slice, {lower ? py::make_constant(std::to_string(run.start)) : Expr{},
                                               upper ? py::make_constant(std::to_string(stop)) : Expr{},
                                               step ? py::make_constant(std::to_string(stride)) : Expr{}});
  Expr sub = py::make_node(ExprKind::Subscript, {std::move(base), std::move(slice)});
  return py::make_node(ExprKind::Starred, {std::move(sub)});
}

int star_sites(Expr& root, const RefactorContext& ctx, bool apply, bool& unresolved) {
  int found = 0;
  py::walk(root, [&](Expr& e) {
    if (e.kind != ExprKind::Call) return;
    auto runs = star_runs(e, ctx, unresolved);
    found += static_cast<int>(runs.size());
    if (!apply || runs.empty()) return;
    std::vector<Expr> items;
    std::size_t a = 0;
    for (const auto& run : runs) {
      for (; a < run.begin; ++a) items.push_back(e.items[a]);
      items.push_back(star_argument(run, ctx));
      a = run.end;
    }
    for (; a < e.items.size(); ++a) items.push_back(e.items[a]);
    e.items = std::move(items);
  });
  return found;
}

// ---------------------------------------------------------------------------
// Driver

class Engine {
 public:
  Engine(const RefactorContext& ctx, std::optional<IdiomKind> apply, std::set<std::string> taken)
      : ctx_(ctx), apply_(apply), taken_(std::move(taken)) {}

  void run(py::Module& module) {
    ScopeView scope{&module, 0, 0};
    visit_block(module, scope);
  }

  std::vector<Site> sites;
  std::vector<std::string> rejections;
  int applied = 0;

 private:
  bool applying(IdiomKind k) const { return apply_ && *apply_ == k; }

  void record(const Outcome& o) {
    sites.push_back(Site{o.idiom, o.first_line, o.last_line, o.snippet});
    if (applying(o.idiom)) ++applied;
  }

  void note(const Outcome& o) {
    if (o.kind == Outcome::Rejected && (!apply_ || *apply_ == o.idiom)) {
      rejections.push_back(std::string(idiom_name(o.idiom)) + ": " + o.reason);
    }
  }

  // Statements owned by comprehension, loop-else and swap sites.
  std::vector<bool> claims(const std::vector<Stmt>& block, const ScopeView& scope) {
    std::vector<bool> claimed(block.size(), false);
    for (std::size_t i = 0; i < block.size(); ++i) {
      for (auto rule : {&comprehension, &loop_else, &rotation}) {
        Outcome o = rule(block, i, scope);
        if (o.kind == Outcome::Match) {
          for (std::size_t m = i; m < i + o.consumed; ++m) claimed[m] = true;
          break;
        }
      }
    }
    return claimed;
  }

  void visit_block(std::vector<Stmt>& block, const ScopeView& scope) {
    std::size_t i = 0;
    auto claimed = claims(block, scope);
    while (i < block.size()) {
      Outcome o;
      for (auto rule : {&comprehension, &loop_else, &rotation}) {
        o = rule(block, i, scope);
        if (o.kind != Outcome::NoMatch) break;
      }
      if (o.kind == Outcome::Rejected) {
        note(o);
        o = Outcome::none();
      }
      if (o.kind == Outcome::NoMatch && !claimed[i]) o = assign_run(block, i, claimed);
      if (o.kind == Outcome::Match) {
        record(o);
        if (applying(o.idiom)) {
          auto at = block.begin() + static_cast<std::ptrdiff_t>(i);
          block.erase(at, at + static_cast<std::ptrdiff_t>(o.consumed));
          block.insert(block.begin() + static_cast<std::ptrdiff_t>(i), o.replacement.begin(), o.replacement.end());
          claimed = claims(block, scope);
          i += o.replacement.size();
        } else {
          i += o.consumed;
        }
        continue;
      }
      visit_stmt(block[i], scope);
      ++i;
    }
  }

  void visit_stmt(Stmt& s, const ScopeView& scope) {
    Outcome fm = for_multi(s, scope, ctx_, taken_, applying(IdiomKind::ForMultiTargets));
    if (fm.kind == Outcome::Match) {
      record(fm);
    } else {
      note(fm);
    }
    Outcome tt = truth_test(s, applying(IdiomKind::TruthValueTest));
    if (tt.kind == Outcome::Match) record(tt);

    for (Expr* e : py::own_exprs(s)) {
      int chains = chain_sites(*e, applying(IdiomKind::ChainComparison));
      for (int c = 0; c < chains; ++c) {
        Outcome o;
        o.idiom = IdiomKind::ChainComparison;
        o.first_line = s.line;
        o.last_line = s.line;
        o.snippet = py::render(*e);
        record(o);
      }
      bool unresolved = false;
      int stars = star_sites(*e, ctx_, applying(IdiomKind::StarInFuncCall), unresolved);
      for (int c = 0; c < stars; ++c) {
        Outcome o;
        o.idiom = IdiomKind::StarInFuncCall;
        o.first_line = s.line;
        o.last_line = s.line;
        o.snippet = py::render(*e);
        record(o);
      }
      if (unresolved) note(Outcome::reject(IdiomKind::StarInFuncCall, "subscript index is not a known constant"));
    }

    bool new_scope = s.kind == StmtKind::FunctionDef || s.kind == StmtKind::ClassDef;
    bool is_loop = s.kind == StmtKind::For || s.kind == StmtKind::While;
    ScopeView inner = scope;
    if (new_scope) {
      inner = ScopeView{&s.body, 0, 0};
    } else if (is_loop && scope.loop_first == 0) {
      inner.loop_first = s.line;
      inner.loop_last = s.end_line;
    }
    visit_block(s.body, inner);
    if (!new_scope) {
      visit_block(s.orelse, inner);
      for (auto& h : s.handlers) visit_block(h.body, inner);
      visit_block(s.finalbody, inner);
    }
  }

  const RefactorContext& ctx_;
  std::optional<IdiomKind> apply_;
  std::set<std::string> taken_;
};

RefactorContext without_rebound(const RefactorContext& ctx, const py::Module& module) {
  RefactorContext out = ctx;
  std::vector<std::string> bound;
  py::walk_stmts(module, [&](const Stmt& s) {
    for (const auto& t : s.targets) py::target_names(t, bound);
  });
  for (const auto& n : py::bound_names(module)) bound.push_back(n);
  for (const auto& n : bound) {
    out.int_constants.erase(n);
    out.sequence_lengths.erase(n);
    out.element_lengths.erase(n);
  }
  return out;
}

std::set<std::string> identifier_set(const py::Module& m) {
  auto ids = py::identifiers(m);
  return {ids.begin(), ids.end()};
}

}  // namespace

RefactorContext analyze_setup(const std::string& setup, std::int64_t size) {
  RefactorContext ctx;
  ctx.int_constants["_size"] = size;
  auto module = py::parse(setup);
  auto eval_int = [&](const Expr& e) { return int_value(e, ctx); };
  auto forget = [&](const std::string& n) {
    ctx.int_constants.erase(n);
    ctx.sequence_lengths.erase(n);
    ctx.element_lengths.erase(n);
  };
  for (const auto& s : module) {
    const std::string* name = single_name_target(s);
    if (name == nullptr) {
      for (const auto& n : py::bound_names({s})) forget(n);
      continue;
    }
    forget(*name);
    const Expr& v = s.value;
    if (auto k = eval_int(v)) {
      ctx.int_constants[*name] = *k;
      continue;
    }
    if ((v.kind == ExprKind::List || v.kind == ExprKind::Tuple) &&
        std::none_of(v.items.begin(), v.items.end(), [](const Expr& e) { return e.kind == ExprKind::Starred; })) {
      ctx.sequence_lengths[*name] = static_cast<std::int64_t>(v.items.size());
      if (!v.items.empty() && std::all_of(v.items.begin(), v.items.end(), [&](const Expr& e) {
            return e.kind == ExprKind::Tuple && e.items.size() == v.items[0].items.size();
          })) {
        ctx.element_lengths[*name] = static_cast<std::int64_t>(v.items[0].items.size());
      }
      continue;
    }
    // list(range(N)) / range(N)
    auto range_len = [&](const Expr& e) -> std::optional<std::int64_t> {
      if (e.kind == ExprKind::Call && e.items.size() == 2 && is_name(e.items[0], "range")) {
        if (auto n = eval_int(e.items[1])) return std::max<std::int64_t>(*n, 0);
      }
      return std::nullopt;
    };
    if (v.kind == ExprKind::Call && v.items.size() == 2 && is_name(v.items[0], "list")) {
      if (auto n = range_len(v.items[1])) ctx.sequence_lengths[*name] = *n;
      continue;
    }
    if (auto n = range_len(v)) {
      ctx.sequence_lengths[*name] = *n;
      continue;
    }
    // [(a, b, ...) for x in range(N)]
    if (v.kind == ExprKind::ListComp && v.items.size() == 2 && v.items[1].items.size() == 2) {
      if (auto n = range_len(v.items[1].items[1])) {
        ctx.sequence_lengths[*name] = *n;
        if (v.items[0].kind == ExprKind::Tuple &&
            std::none_of(v.items[0].items.begin(), v.items[0].items.end(),
                         [](const Expr& e) { return e.kind == ExprKind::Starred; })) {
          ctx.element_lengths[*name] = static_cast<std::int64_t>(v.items[0].items.size());
        }
      }
    }
  }
  // Names later mutated through method calls or subscripts are not tracked.
  py::walk_exprs(module, [&](const Expr& e) {
    if (e.kind == ExprKind::Attribute && is_name(e.items[0]) && e.text != "shuffle") {
      ctx.sequence_lengths.erase(e.items[0].text);
      ctx.element_lengths.erase(e.items[0].text);
    }
  });
  return ctx;
}

RefactorContext context_for(const CodePair& pair) {
  RefactorContext ctx = analyze_setup(pair.setup_source, pair.size);
  ctx.features = pair.features;
  return ctx;
}

std::vector<Site> detect(std::string_view source, const RefactorContext& ctx) {
  auto module = py::parse(source);
  RefactorContext local = without_rebound(ctx, module);
  Engine engine(local, std::nullopt, identifier_set(module));
  engine.run(module);
  auto sites = engine.sites;
  std::stable_sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) { return a.first_line < b.first_line; });
  return sites;
}

namespace {

std::pair<std::string, int> refactor_impl(std::string_view source, IdiomKind idiom, const RefactorContext& ctx) {
  auto module = py::parse(source);
  RefactorContext local = without_rebound(ctx, module);
  Engine engine(local, idiom, identifier_set(module));
  engine.run(module);
  if (engine.applied == 0 && !engine.rejections.empty()) throw NotApplicable(engine.rejections.front());
  return {py::render(module), engine.applied};
}

}  // namespace

std::string refactor(std::string_view source, IdiomKind idiom, const RefactorContext& ctx) {
  return refactor_impl(source, idiom, ctx).first;
}

void refactor_pair(CodePair& pair) {
  auto [out, applied] = refactor_impl(pair.non_idiomatic_source, pair.idiom, context_for(pair));
  if (applied == 0) {
    throw NotApplicable(std::string("no ") + std::string(idiom_name(pair.idiom)) + " site in " + pair.pair_id);
  }
  pair.idiomatic_source = out;
}

}  // namespace idiomperf
