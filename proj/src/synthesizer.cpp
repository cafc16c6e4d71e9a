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

#include "idiomperf/synthesizer.hpp"

#include <functional>
#include <sstream>

#include "idiomperf/pyast.hpp"

namespace idiomperf {

namespace {

std::string pad(int level) { return std::string(static_cast<std::size_t>(level) * 4, ' '); }

std::string indent(const std::string& text, int level) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    out += line.empty() ? "\n" : pad(level) + line + "\n";
  }
  return out;
}

std::string canonical(const std::string& src) { return py::render(py::parse(src)); }

std::string shuffled_range(const std::string& name) {
  return name + " = list(range(_size))\nif _rng is not None:\n    _rng.shuffle(" + name + ")\n";
}

// ---------------------------------------------------------------------------
// Comprehensions

struct Synth {
  std::string setup;
  std::string payload;
};

Synth comprehension(const FeatureVector& fv) {
  auto num_for = fv.count(dim::kNumFor);
  auto num_if = fv.count(dim::kNumIf);
  auto num_ifelse = fv.count(dim::kNumIfElse);
  Synth s;
  s.setup = shuffled_range("x_0");
  for (std::int64_t j = 1; j < num_for; ++j) s.setup += "x_" + std::to_string(j) + " = [0]\n";

  std::string init, leaf;
  switch (fv.idiom) {
    case IdiomKind::ListComprehension:
      init = "l = []";
      leaf = "l.append(e_0)";
      break;
    case IdiomKind::SetComprehension:
      init = "s = set()";
      leaf = "s.add(e_0)";
      break;
    default:
      init = "d = {}";
      leaf = "d[e_0] = e_0";
      break;
  }
  std::string body = init + "\n";
  int level = 0;
  for (std::int64_t j = 0; j < num_for; ++j, ++level) {
    body += pad(level) + "for e_" + std::to_string(j) + " in x_" + std::to_string(j) + ":\n";
  }
  for (std::int64_t j = 0; j < num_if; ++j, ++level) body += pad(level) + "if e_0 // 1:\n";
  // Right-nested if/else chain with `num_ifelse` conditionals and one more leaf.
  for (std::int64_t j = 0; j < num_ifelse; ++j) {
    body += pad(level) + "if e_0 % 2:\n" + pad(level + 1) + leaf + "\n" + pad(level) + "else:\n";
    ++level;
  }
  body += pad(level) + leaf + "\n";
  s.payload = body;
  return s;
}

// ---------------------------------------------------------------------------
// Chain comparison: operand values are found by a small search over a model
// of ints, None and lists, so that every link but possibly the last holds.

struct Val {
  enum Kind { Int, None, List } kind = Int;
  std::int64_t k = 0;
  std::vector<int> elems;  // operand indices held by a list
  int ident = 0;  // object identity
  std::string src;
};

bool equal(const std::vector<Val>& ops, const Val& a, const Val& b) {
  if (a.ident == b.ident) return true;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Val::Int:
      return a.k == b.k;
    case Val::None:
      return true;
    case Val::List:
      if (a.elems.size() != b.elems.size()) return false;
      for (std::size_t i = 0; i < a.elems.size(); ++i) {
        if (!equal(ops, ops[static_cast<std::size_t>(a.elems[i])], ops[static_cast<std::size_t>(b.elems[i])])) {
          return false;
        }
      }
      return true;
  }
  return false;
}

// Returns 0/1, or -1 when the comparison would raise or is identity-ambiguous.
int evaluate(const std::vector<Val>& ops, const std::string& op, const Val& a, const Val& b) {
  if (op == "==") return equal(ops, a, b);
  if (op == "!=") return !equal(ops, a, b);
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    if (a.kind != Val::Int || b.kind != Val::Int) return -1;
    if (op == "<") return a.k < b.k;
    if (op == "<=") return a.k <= b.k;
    if (op == ">") return a.k > b.k;
    return a.k >= b.k;
  }
  if (op == "is" || op == "is not") {
    bool same = a.ident == b.ident || (a.kind == Val::None && b.kind == Val::None);
    // Equal ints in distinct names may or may not share an object.
    if (!same && a.kind == Val::Int && b.kind == Val::Int && a.k == b.k) return -1;
    return op == "is" ? same : !same;
  }
  if (op == "in" || op == "not in") {
    if (b.kind != Val::List) return -1;
    bool found = false;
    for (int e : b.elems) found = found || equal(ops, a, ops[static_cast<std::size_t>(e)]);
    return op == "in" ? found : !found;
  }
  return -1;
}

std::vector<Val> candidates(int index, const std::vector<Val>& chosen) {
  std::vector<Val> out;
  int fresh = 1000 + index;
  for (std::int64_t k = 0; k <= 9; ++k) out.push_back({Val::Int, k, {}, fresh, std::to_string(k)});
  out.push_back({Val::None, 0, {}, 0, "None"});
  if (index > 0) {
    const Val& prev = chosen.back();
    std::string prev_name = "c_" + std::to_string(index - 1);
    Val alias = prev;
    alias.src = prev_name;
    out.push_back(alias);
    out.push_back({Val::List, 0, {index - 1}, fresh, "[" + prev_name + "]"});
    out.push_back({Val::List, 0, {}, fresh, "[]"});
  }
  return out;
}

bool solve(const std::vector<std::string>& ops, bool last_true, std::vector<Val>& chosen) {
  int index = static_cast<int>(chosen.size());
  if (index == static_cast<int>(ops.size()) + 1) return true;
  for (auto& c : candidates(index, chosen)) {
    if (index > 0) {
      bool want = index < static_cast<int>(ops.size()) || last_true;
      int got = evaluate(chosen, ops[static_cast<std::size_t>(index - 1)], chosen.back(), c);
      if (got < 0 || (got == 1) != want) continue;
    }
    chosen.push_back(c);
    if (solve(ops, last_true, chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

Synth chain(const FeatureVector& fv) {
  auto ops = split_compops(fv.choice(dim::kCompops));
  std::vector<Val> chosen;
  if (!solve(ops, fv.flag(dim::kIsTrue), chosen)) {
    throw IllegalFeature("no operand assignment satisfies " + fv.choice(dim::kCompops));
  }
  Synth s;
  for (std::size_t i = 0; i < chosen.size(); ++i) s.setup += "c_" + std::to_string(i) + " = " + chosen[i].src + "\n";
  std::string expr;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i > 0) expr += " and ";
    expr += "c_" + std::to_string(i) + " " + ops[i] + " c_" + std::to_string(i + 1);
  }
  s.payload = "r = " + expr + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Truth value test

std::string truthy_counterpart(const std::string& empty) {
  static const std::map<std::string, std::string> alt = {
      {"None", "1"},           {"False", "True"},  {"''", "'a'"},
      {"0", "1"},              {"0.0", "1.0"},     {"0j", "1j"},
      {"Decimal(0)", "Decimal(1)"}, {"Fraction(0, 1)", "Fraction(1, 1)"},
      {"()", "(0,)"},          {"[]", "[0]"},      {"{}", "{0: 0}"},
      {"dict()", "{0: 0}"},    {"set()", "{0}"},   {"range(0)", "range(1)"}};
  return alt.at(empty);
}

Synth truth(const FeatureVector& fv) {
  const std::string& value = fv.choice(dim::kEmptyValue);
  const std::string& op = fv.choice(dim::kEqOp);
  bool holds = fv.flag(dim::kIsTrue);
  // `a == V` holds exactly when a is the empty value.
  bool empty = (op == "==") == holds;
  Synth s;
  s.setup = "from decimal import Decimal\nfrom fractions import Fraction\na = " +
            (empty ? value : truthy_counterpart(value)) + "\n";
  std::string test = "a " + op + " " + value;
  const std::string& parent = fv.choice(dim::kTest);
  if (parent == "If") {
    s.payload = "if " + test + ":\n    r = 1\n";
  } else if (parent == "While") {
    s.payload = "while " + test + ":\n    r = 1\n    break\n";
  } else {
    s.payload = "try:\n    assert " + test + "\nexcept AssertionError:\n    r = 0\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Loop else

Synth loop_else(const FeatureVector& fv) {
  Synth s;
  s.setup = shuffled_range("x_0") + (fv.flag(dim::kIsBreak) ? "t_0 = _size - 1\n" : "t_0 = -1\n");
  bool with_else = fv.choice(dim::kConditionKind) == "if-else";
  std::string found = "flag = False\nbreak\n";
  std::string p = "flag = True\n";
  if (fv.choice(dim::kLoopKind) == "for") {
    p += "for e_0 in x_0:\n    if e_0 == t_0:\n" + indent(found, 2);
  } else {
    p += "i_0 = 0\nwhile i_0 < len(x_0):\n    if x_0[i_0] == t_0:\n" + indent(found, 2) + "    i_0 += 1\n";
  }
  p += "if flag:\n    r = 1\n";
  if (with_else) p += "else:\n    r = 0\n";
  s.payload = p;
  return s;
}

// ---------------------------------------------------------------------------
// Assign multiple targets

Synth assign(const FeatureVector& fv) {
  auto n = fv.count(dim::kNumAssign);
  Synth s;
  if (fv.flag(dim::kIsSwap)) {
    for (std::int64_t i = 0; i < n; ++i) s.setup += "a_" + std::to_string(i) + " = " + std::to_string(i) + "\n";
    s.payload = "t = a_0\n";
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      s.payload += "a_" + std::to_string(i) + " = a_" + std::to_string(i + 1) + "\n";
    }
    s.payload += "a_" + std::to_string(n - 1) + " = t\n";
    return s;
  }
  bool is_const = fv.flag(dim::kIsConst);
  for (std::int64_t i = 0; i < n; ++i) {
    auto idx = std::to_string(i);
    if (is_const) {
      s.payload += "a_" + idx + " = " + idx + "\n";
    } else {
      s.setup += "b_" + idx + " = " + idx + "\n";
      s.payload += "a_" + idx + " = b_" + idx + "\n";
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Star in function call

Synth star(const FeatureVector& fv) {
  auto n = fv.count(dim::kNumSubscript);
  bool sliced = fv.flag(dim::kHasSubscript);
  std::int64_t start = sliced && fv.flag(dim::kHasLower) ? 1 : 0;
  std::int64_t stride = sliced && fv.flag(dim::kHasStep) ? 2 : 1;
  std::int64_t last = start + (n - 1) * stride;
  std::int64_t length = last + 1 + (sliced && fv.flag(dim::kHasUpper) ? stride : 0);
  bool is_const = fv.flag(dim::kIsConst);
  Synth s;
  s.setup = "def func(*args):\n    return args\ne_list = list(range(" + std::to_string(length) + "))\n";
  std::string args;
  for (std::int64_t j = 0; j < n; ++j) {
    std::string idx = std::to_string(start + j * stride);
    if (!is_const) {
      s.setup += "i_" + std::to_string(j) + " = " + idx + "\n";
      idx = "i_" + std::to_string(j);
    }
    if (j > 0) args += ", ";
    args += "e_list[" + idx + "]";
  }
  s.payload = "r = func(" + args + ")\n";
  return s;
}

// ---------------------------------------------------------------------------
// For multiple targets

Synth for_multi(const FeatureVector& fv) {
  auto subs = fv.count(dim::kNumSubscript);
  auto targets = fv.count(dim::kNumTarget);
  std::int64_t width = targets + (fv.flag(dim::kHasStarred) ? 1 : 0);
  std::string tuple = "(e";
  for (std::int64_t i = 1; i < width; ++i) tuple += ", e + " + std::to_string(i);
  tuple += width == 1 ? ",)" : ")";
  Synth s;
  s.setup = "x_0 = [" + tuple + " for e in range(_size)]\n";
  std::string items;
  for (std::int64_t j = 0; j < subs; ++j) {
    if (j > 0) items += ", ";
    items += "e[" + std::to_string(targets - 1 - (j % targets)) + "]";
  }
  s.payload = "for e in x_0:\n    r = " + items + "\n";
  return s;
}

}  // namespace

std::string make_pair_id(const FeatureVector& fv) {
  return std::string(idiom_slug(fv.idiom)) + "-" + fnv1a64_hex(fv.canonical() + "|" + std::string(kTemplateVersion));
}

CodePair synthesize(const FeatureVector& fv) {
  validate(fv);
  Synth s;
  switch (fv.idiom) {
    case IdiomKind::ListComprehension:
    case IdiomKind::SetComprehension:
    case IdiomKind::DictComprehension:
      s = comprehension(fv);
      break;
    case IdiomKind::ChainComparison:
      s = chain(fv);
      break;
    case IdiomKind::TruthValueTest:
      s = truth(fv);
      break;
    case IdiomKind::LoopElse:
      s = loop_else(fv);
      break;
    case IdiomKind::AssignMultiTargets:
      s = assign(fv);
      break;
    case IdiomKind::StarInFuncCall:
      s = star(fv);
      break;
    case IdiomKind::ForMultiTargets:
      s = for_multi(fv);
      break;
  }
  CodePair p;
  p.pair_id = make_pair_id(fv);
  p.idiom = fv.idiom;
  p.features = fv;
  p.setup_source = s.setup.empty() ? std::string() : canonical(s.setup);
  p.non_idiomatic_source = canonical(s.payload);
  p.scope_mode = fv.scope();
  p.size = fv.has(dim::kSize) ? fv.count(dim::kSize) : 0;
  return p;
}

std::vector<std::string> shared_names(const std::string& payload, const std::string& setup) {
  auto setup_mod = py::parse(setup);
  auto payload_mod = py::parse(payload);
  std::vector<std::string> out;
  for (const auto& name : py::bound_names(setup_mod)) {
    if (py::mentions(payload_mod, name)) out.push_back(name);
  }
  return out;
}

std::string wrap_scope(const std::string& payload, const std::string& setup, Scope scope, const RunnerOptions& opts) {
  auto payload_mod = py::parse(payload);
  py::parse(setup);
  std::string body = py::render(payload_mod);
  if (payload_mod.empty()) body = "pass\n";

  std::ostringstream m;
  m << "import sys as _sys\nimport os as _os\nimport json as _json\nfrom time import perf_counter_ns as _pc\n";
  m << "_out = _sys.stdout\n_sys.stdout = open(_os.devnull, 'w')\n";
  m << "_size = " << opts.size << "\n";
  if (opts.shuffle_seed) {
    m << "import random as _random\n_rng = _random.Random(" << *opts.shuffle_seed << ")\n";
  } else {
    m << "_rng = None\n";
  }
  m << "_reps = " << (opts.calibrate_ns ? 1 : std::max<std::int64_t>(opts.reps, 1)) << "\n";
  m << "_k = " << opts.iterations << "\n";
  m << "_calibrate = " << (opts.calibrate_ns ? "True" : "False") << "\n";
  m << "_target = " << static_cast<std::int64_t>(opts.calibrate_ns.value_or(0.0)) << "\n";
  m << "_timings = []\n";
  m << "_cold = True\n";
  m << setup;

  std::string timed;
  if (scope == Scope::Local) {
    std::string params;
    for (const auto& n : shared_names(payload, setup)) {
      if (!params.empty()) params += ", ";
      params += n + "=" + n;
    }
    m << "def _payload(" << params << "):\n    for _rep in range(_reps):\n" << indent(body, 2);
    timed = "_payload()\n";
  } else {
    timed = "for _rep in range(_reps):\n" + indent(body, 1);
  }
  m << "while True:\n"
    << "    _t0 = _pc()\n"
    << indent(timed, 1)
    << "    _dt = _pc() - _t0\n"
    << "    if _calibrate:\n"
    << "        if _cold:\n"
    << "            _cold = False\n"
    << "            continue\n"
    << "        if _dt >= _target or _reps >= 1073741824:\n"
    << "            break\n"
    << "        _reps *= 2\n"
    << "        continue\n"
    << "    _timings.append(_dt / _reps)\n"
    << "    if len(_timings) >= _k:\n"
    << "        break\n";
  m << "_sys.stdout = _out\n";
  m << "if _calibrate:\n    print(_json.dumps({'reps': _reps}))\n"
    << "else:\n    print(_json.dumps({'timings_ns': _timings}))\n";
  return m.str();
}

}  // namespace idiomperf
