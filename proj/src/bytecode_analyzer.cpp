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

#include "idiomperf/bytecode_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "idiomperf/bench_runner.hpp"
#include "idiomperf/process.hpp"
#include "idiomperf/pyast.hpp"
#include "idiomperf/synthesizer.hpp"

namespace idiomperf {

namespace {

constexpr const char* kDisassembler = R"PY(
import dis, json, sys, types
job = json.load(sys.stdin)
for i, src in enumerate(job["sources"]):
    try:
        code = compile(src, "<payload>", "exec")
    except SyntaxError as e:
        print("@@compile-error", i, e.msg, "line", e.lineno)
        sys.exit(3)
    if job["local"]:
        code = next(c for c in code.co_consts if isinstance(c, types.CodeType) and c.co_name == "_payload")
    print("@@half", i)
    dis.dis(code)
)PY";

constexpr const char* kProber = R"PY(
import contextlib, inspect, io, json, random, sys
job = json.load(sys.stdin)
ROLE = {
    "iterated": ("__iter__", "__next__", "__len__"),
    "tested": ("__bool__", "__len__"),
    "compared": ("__eq__", "__ne__", "__lt__", "__le__", "__gt__", "__ge__"),
}
def py_overloads(t, names):
    out = []
    for n in names:
        for k in t.__mro__:
            if n in k.__dict__:
                if inspect.isfunction(k.__dict__[n]):
                    out.append(n)
                break
    return out
found = []
for half in job["halves"]:
    g = {"__name__": "__main__", "_size": job["size"], "_rng": random.Random(job["seed"])}
    with contextlib.redirect_stdout(io.StringIO()):
        exec(job["setup"], g)
        try:
            exec(half["source"], g)
        except Exception:
            pass
        for expr, role in half["targets"]:
            try:
                v = eval(expr, g)
            except Exception:
                continue
            t = type(v)
            names = py_overloads(t, ROLE[role])
            if role == "iterated":
                try:
                    names += [n for n in py_overloads(type(iter(v)), ("__next__",)) if n not in names]
                except Exception:
                    pass
            found.append({"variant": half["variant"], "expression": expr, "role": role,
                          "type_name": t.__qualname__, "type_module": t.__module__, "overloads": names})
print(json.dumps(found))
)PY";

std::string indent_lines(const std::string& text, const std::string& pad) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) out += line.empty() ? "\n" : pad + line + "\n";
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_opname(std::string_view s) {
  if (s.empty() || !std::isupper(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c) || std::isdigit(c) || c == '_'; });
}

std::string strip_addresses(std::string s) {
  static const std::regex addr(" at 0x[0-9a-fA-F]+");
  return std::regex_replace(s, addr, "");
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

OpcodeCounts count_keys(const std::vector<Instruction>& xs) {
  OpcodeCounts out;
  for (const auto& i : xs) ++out[diff_key(i.opname)];
  return out;
}

std::vector<AlignedRow> align(const std::vector<Instruction>& a, const std::vector<Instruction>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::string> ka(n), kb(m);
  for (std::size_t i = 0; i < n; ++i) ka[i] = diff_key(a[i].opname);
  for (std::size_t j = 0; j < m; ++j) kb[j] = diff_key(b[j].opname);
  // lcs[i][j]: common subsequence length of a[i..] and b[j..]
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = ka[i] == kb[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<AlignedRow> out;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && ka[i] == kb[j]) {
      out.push_back({AlignTag::Same, b[j]});
      ++i, ++j;
    } else if (j == m || (i < n && lcs[i + 1][j] >= lcs[i][j + 1])) {
      out.push_back({AlignTag::Removed, a[i++]});
    } else {
      out.push_back({AlignTag::Added, b[j++]});
    }
  }
  return out;
}

std::string_view align_tag_name(AlignTag t) {
  switch (t) {
    case AlignTag::Same:
      return "same";
    case AlignTag::Removed:
      return "removed";
    case AlignTag::Added:
      return "added";
  }
  return "same";
}

bool is_comprehension(const py::Expr& e) {
  return e.kind == py::ExprKind::ListComp || e.kind == py::ExprKind::SetComp ||
         e.kind == py::ExprKind::DictComp || e.kind == py::ExprKind::GeneratorExp;
}

bool comprehension_idiom(IdiomKind k) {
  return k == IdiomKind::ListComprehension || k == IdiomKind::SetComprehension || k == IdiomKind::DictComprehension;
}

using Targets = std::vector<std::pair<std::string, std::string>>;

void add_target(Targets& out, const py::Expr& e, const std::string& role) {
  if (e.absent()) return;
  std::pair<std::string, std::string> t{py::render(e), role};
  if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
}

// A truth-tested expression; boolean operators pass the test to their operands.
void add_tested(Targets& out, const py::Expr& e) {
  if (e.kind == py::ExprKind::BoolOp) {
    for (const auto& x : e.items) add_tested(out, x);
  } else if (e.kind == py::ExprKind::UnaryOp && e.text == "not") {
    add_tested(out, e.items[0]);
  } else if (e.kind != py::ExprKind::Compare) {
    add_target(out, e, "tested");
  }
}

void expr_targets(Targets& out, const py::Expr& root) {
  py::walk(root, [&](const py::Expr& e) {
    switch (e.kind) {
      case py::ExprKind::CompFor:
        add_target(out, e.items[1], "iterated");
        for (std::size_t i = 2; i < e.items.size(); ++i) add_tested(out, e.items[i]);
        break;
      case py::ExprKind::UnaryOp:
        if (e.text == "not") add_tested(out, e.items[0]);
        break;
      case py::ExprKind::IfExp:
        add_tested(out, e.items[0]);
        break;
      case py::ExprKind::Compare:
        for (const auto& x : e.items) add_target(out, x, "compared");
        break;
      default:
        break;
    }
  });
}

}  // namespace

bool pinned_interpreter(std::pair<int, int> v) { return v.first == 3 && v.second >= 7 && v.second <= 10; }

std::string alias_opcode(std::string_view op, std::string_view arg, std::string_view argrepr) {
  static const std::set<std::string_view> dropped = {"CACHE", "RESUME", "PRECALL", "EXTENDED_ARG", "NOP",
                                                     "PUSH_NULL", "KW_NAMES"};
  if (dropped.count(op)) return {};
  static const std::map<std::string_view, std::string_view> renames = {
      {"POP_JUMP_FORWARD_IF_FALSE", "POP_JUMP_IF_FALSE"},
      {"POP_JUMP_BACKWARD_IF_FALSE", "POP_JUMP_IF_FALSE"},
      {"POP_JUMP_FORWARD_IF_TRUE", "POP_JUMP_IF_TRUE"},
      {"POP_JUMP_BACKWARD_IF_TRUE", "POP_JUMP_IF_TRUE"},
      {"JUMP_BACKWARD", "JUMP_ABSOLUTE"},
      {"JUMP_BACKWARD_NO_INTERRUPT", "JUMP_ABSOLUTE"},
      {"CALL", "CALL_FUNCTION"},
  };
  if (auto it = renames.find(op); it != renames.end()) return std::string(it->second);
  if (op == "COPY" && arg == "1") return "DUP_TOP";
  if (op == "SWAP" && arg == "2") return "ROT_TWO";
  if (op == "SWAP" && arg == "3") return "ROT_THREE";
  if (op == "LOAD_ATTR" && argrepr.rfind("NULL|self + ", 0) == 0) return "LOAD_METHOD";
  return std::string(op);
}

std::string diff_key(std::string_view op) {
  if (op == "POP_JUMP_IF_FALSE" || op == "POP_JUMP_IF_TRUE") return "POP_JUMP_IF";
  if (op == "JUMP_IF_FALSE_OR_POP" || op == "JUMP_IF_TRUE_OR_POP") return "JUMP_IF_OR_POP";
  if (op == "JUMP_FORWARD" || op == "JUMP_ABSOLUTE") return "JUMP";
  return std::string(op);
}

std::vector<Instruction> parse_dis(std::string_view text) {
  static const std::regex header(R"(^Disassembly of <code object (\S+))");
  std::vector<Instruction> out;
  std::string code = "<top>";
  bool exception_table = false;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    std::string t = trim(line);
    if (t.empty()) {
      exception_table = false;
      continue;
    }
    std::smatch m;
    if (std::regex_search(t, m, header)) {
      code = m[1];
      continue;
    }
    if (t == "ExceptionTable:") {
      exception_table = true;
      continue;
    }
    if (exception_table) continue;

    std::istringstream toks(t);
    std::vector<std::string> words;
    for (std::string w; toks >> w;) words.push_back(w);
    std::size_t i = 0;
    // line number, jump-target marker, offset, 3.13 labels
    while (i < words.size() && (all_digits(words[i]) || words[i] == ">>" || words[i] == "-->" ||
                                (words[i].size() > 1 && words[i][0] == 'L' && words[i].back() == ':'))) {
      ++i;
    }
    if (i == words.size()) continue;  // bare label line
    if (!is_opname(words[i])) throw UnsupportedInterpreter("unreadable disassembly line: " + line);
    std::string op = words[i++];
    std::string arg = i < words.size() && all_digits(words[i]) ? words[i] : "";
    std::string argrepr;
    auto open = t.find('(', t.find(op) + op.size());
    auto close = t.rfind(')');
    if (open != std::string::npos && close != std::string::npos && close > open) {
      argrepr = strip_addresses(t.substr(open + 1, close - open - 1));
    }
    std::string name = alias_opcode(op, arg, argrepr);
    if (name.empty()) continue;
    if (name == "LOAD_METHOD" && argrepr.rfind("NULL|self + ", 0) == 0) argrepr = argrepr.substr(12);
    out.push_back({std::move(name), std::move(argrepr), code});
  }
  return out;
}

std::string disassembly_source(const std::string& payload, const std::string& setup, Scope scope) {
  std::string body = py::render(py::parse(payload));
  if (scope == Scope::Global) return body;
  std::string params;
  for (const auto& n : shared_names(payload, setup)) {
    if (!params.empty()) params += ", ";
    params += n + "=" + n;
  }
  if (body.empty()) body = "pass\n";
  return "def _payload(" + params + "):\n" + indent_lines(body, "    ");
}

Disassembly disassemble(const CodePair& pair, const std::string& interpreter) {
  std::string interp = resolve_interpreter(interpreter);
  std::vector<std::string> sources;
  try {
    sources = {disassembly_source(pair.non_idiomatic_source, pair.setup_source, pair.scope_mode),
               disassembly_source(pair.idiomatic_source, pair.setup_source, pair.scope_mode)};
  } catch (const py::ParseError& e) {
    throw CompileError(pair.pair_id + ": " + e.what());
  }
  nlohmann::json job{{"sources", sources}, {"local", pair.scope_mode == Scope::Local}};
  ProcessOptions opts;
  opts.stdin_data = job.dump();
  opts.env = scrubbed_environment();
  auto res = run_process({interp, "-I", "-S", "-c", kDisassembler}, opts);
  if (res.exit_code == 3) throw CompileError(pair.pair_id + ": " + trim(res.out.substr(res.out.rfind("@@"))));
  if (!res.ok()) throw UnsupportedInterpreter("disassembler failed: " + res.err);

  auto second = res.out.find("@@half 1\n");
  auto first = res.out.find("@@half 0\n");
  if (first != 0 || second == std::string::npos) throw UnsupportedInterpreter("unexpected disassembler output");
  Disassembly d;
  d.non_idiomatic = parse_dis(std::string_view(res.out).substr(9, second - 9));
  d.idiomatic = parse_dis(std::string_view(res.out).substr(second + 9));
  d.interpreter_id = interpreter_version(interp);
  return d;
}

BytecodeDiff diff(const std::vector<Instruction>& a, const std::vector<Instruction>& b) {
  BytecodeDiff d;
  d.instructions_non_id = a;
  d.instructions_id = b;
  auto ca = count_keys(a), cb = count_keys(b);
  for (const auto& [k, n] : cb) {
    int extra = n - (ca.count(k) ? ca.at(k) : 0);
    if (extra > 0) d.added[k] = extra;
  }
  for (const auto& [k, n] : ca) {
    int extra = n - (cb.count(k) ? cb.at(k) : 0);
    if (extra > 0) d.removed[k] = extra;
  }
  d.aligned = align(a, b);
  return d;
}

BytecodeDiff diff(const CodePair& pair, const Disassembly& dis) {
  BytecodeDiff d = diff(dis.non_idiomatic, dis.idiomatic);
  d.pair_id = pair.pair_id;
  d.interpreter_id = dis.interpreter_id;
  return d;
}

std::vector<const ProbedObject*> RuntimeProbe::overloaded() const {
  std::vector<const ProbedObject*> out;
  for (const auto& o : objects) {
    if (o.type_module != "builtins" && !o.overloads.empty()) out.push_back(&o);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> probe_targets(const std::string& payload) {
  Targets out;
  py::walk_stmts(py::parse(payload), [&](const py::Stmt& s) {
    switch (s.kind) {
      case py::StmtKind::For:
        add_target(out, s.value, "iterated");
        break;
      case py::StmtKind::If:
      case py::StmtKind::While:
      case py::StmtKind::Assert:
        add_tested(out, s.value);
        break;
      default:
        break;
    }
    for (const auto* e : py::own_exprs(s)) expr_targets(out, *e);
  });
  return out;
}

RuntimeProbe runtime_probe(const CodePair& pair, const std::string& interpreter) {
  nlohmann::json halves = nlohmann::json::array();
  for (auto [variant, src] : {std::pair{"NonIdiomatic", &pair.non_idiomatic_source},
                              std::pair{"Idiomatic", &pair.idiomatic_source}}) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& [expr, role] : probe_targets(*src)) targets.push_back({expr, role});
    halves.push_back({{"variant", variant}, {"source", *src}, {"targets", targets}});
  }
  nlohmann::json job{{"setup", pair.setup_source}, {"size", pair.size}, {"seed", 0}, {"halves", halves}};
  ProcessOptions opts;
  opts.stdin_data = job.dump();
  opts.env = scrubbed_environment();
  opts.timeout = std::chrono::minutes(2);
  auto res = run_process({resolve_interpreter(interpreter), "-I", "-S", "-c", kProber}, opts);
  if (!res.ok()) throw ChildCrash("probe of " + pair.pair_id + " failed: " + res.err);
  RuntimeProbe probe;
  for (const auto& j : nlohmann::json::parse(res.out)) {
    probe.objects.push_back({j.at("variant"), j.at("expression"), j.at("role"), j.at("type_name"),
                             j.at("type_module"), j.at("overloads").get<std::vector<std::string>>()});
  }
  return probe;
}

std::string_view root_cause_name(RootCauseKind k) {
  switch (k) {
    case RootCauseKind::R1_AddedPreparation:
      return "R1_AddedPreparation";
    case RootCauseKind::R2_SpecializedReplacement:
      return "R2_SpecializedReplacement";
    case RootCauseKind::R3_RemovedInstructions:
      return "R3_RemovedInstructions";
    case RootCauseKind::R4_OverloadedBuiltins:
      return "R4_OverloadedBuiltins";
    case RootCauseKind::R5_ComplexComputation:
      return "R5_ComplexComputation";
  }
  return "R3_RemovedInstructions";
}

RootCauseKind parse_root_cause(std::string_view s) {
  for (auto k : {RootCauseKind::R1_AddedPreparation, RootCauseKind::R2_SpecializedReplacement,
                 RootCauseKind::R3_RemovedInstructions, RootCauseKind::R4_OverloadedBuiltins,
                 RootCauseKind::R5_ComplexComputation}) {
    if (root_cause_name(k) == s) return k;
  }
  throw std::invalid_argument("unknown root cause: " + std::string(s));
}

std::vector<std::string> complexity_findings(const CodePair& pair) {
  static const std::set<std::string> template_calls = {"len", "range"};
  std::vector<std::string> out;
  auto note = [&](std::string what) {
    if (std::find(out.begin(), out.end(), what) == out.end()) out.push_back(std::move(what));
  };
  py::walk_exprs(py::parse(pair.idiomatic_source), [&](const py::Expr& e) {
    switch (e.kind) {
      case py::ExprKind::Call: {
        const auto& fn = e.items[0];
        bool starred = std::any_of(e.items.begin() + 1, e.items.end(),
                                   [](const py::Expr& a) { return a.kind == py::ExprKind::Starred; });
        if (fn.kind == py::ExprKind::Name && template_calls.count(fn.text)) break;
        if (starred && pair.idiom == IdiomKind::StarInFuncCall) break;
        note("call " + py::render(e));
        break;
      }
      case py::ExprKind::Attribute:
        note("attribute " + py::render(e));
        break;
      case py::ExprKind::Lambda:
        note("lambda " + py::render(e));
        break;
      case py::ExprKind::ListComp:
      case py::ExprKind::SetComp:
      case py::ExprKind::DictComp:
      case py::ExprKind::GeneratorExp:
        if (!comprehension_idiom(pair.idiom)) {
          note("comprehension " + py::render(e));
          break;
        }
        for (const auto& child : e.items) {
          py::walk(child, [&](const py::Expr& inner) {
            if (is_comprehension(inner)) note("nested comprehension " + py::render(inner));
          });
        }
        break;
      default:
        break;
    }
  });
  return out;
}

RootCause classify_root_cause(const BytecodeDiff& d, const CodePair& pair, const std::optional<RuntimeProbe>& probe) {
  RootCause rc;
  if (probe) {
    for (const auto* o : probe->overloaded()) {
      std::string names;
      for (const auto& n : o->overloads) names += (names.empty() ? "" : ",") + n;
      rc.evidence.push_back(o->type_module + "." + o->type_name + " " + names + " on " + o->role + " `" +
                            o->expression + "`");
    }
    if (!rc.evidence.empty()) {
      rc.primary = RootCauseKind::R4_OverloadedBuiltins;
      return rc;
    }
  }
  if (d.added.empty() && d.removed.empty()) {
    throw Unclassifiable(d.pair_id + ": identical opcode multisets and no probe evidence");
  }
  if (auto findings = complexity_findings(pair); !findings.empty()) {
    rc.primary = RootCauseKind::R5_ComplexComputation;
    rc.evidence = std::move(findings);
    return rc;
  }

  static const std::set<std::string> specialized = {"LIST_APPEND", "SET_ADD",   "MAP_ADD",    "DUP_TOP",
                                                    "ROT_TWO",     "ROT_THREE", "BUILD_SLICE"};
  // Over empty data the comprehension body never runs.
  bool empty_loop = comprehension_idiom(pair.idiom) && pair.size == 0;
  if (!d.removed.empty()) {
    for (const auto& [op, n] : d.added) {
      if (!specialized.count(op)) continue;
      if (empty_loop && (op == "LIST_APPEND" || op == "SET_ADD" || op == "MAP_ADD")) continue;
      rc.evidence.push_back("+" + op);
    }
    if (!rc.evidence.empty()) {
      for (const auto& [op, n] : d.removed) rc.evidence.push_back("-" + op);
      rc.primary = RootCauseKind::R2_SpecializedReplacement;
      return rc;
    }
  }
  if (!d.added.empty()) {
    for (const auto& [op, n] : d.added) rc.evidence.push_back("+" + op);
    if (empty_loop) rc.evidence.push_back("size=0: loop body never executes");
    rc.primary = RootCauseKind::R1_AddedPreparation;
    return rc;
  }
  for (const auto& [op, n] : d.removed) rc.evidence.push_back("-" + op);
  rc.primary = RootCauseKind::R3_RemovedInstructions;
  return rc;
}

nlohmann::json to_json(const BytecodeDiff& d, const RootCause& cause) {
  nlohmann::json aligned = nlohmann::json::array();
  for (const auto& row : d.aligned) {
    aligned.push_back({{"change", align_tag_name(row.tag)},
                       {"opname", row.instruction.opname},
                       {"argrepr", row.instruction.argrepr},
                       {"code", row.instruction.code}});
  }
  return {{"pair_id", d.pair_id},
          {"interpreter_id", d.interpreter_id},
          {"added", d.added},
          {"removed", d.removed},
          {"aligned_view", aligned},
          {"root_cause", root_cause_name(cause.primary)},
          {"evidence", cause.evidence}};
}

std::filesystem::path diff_report_path(const std::filesystem::path& dir, const std::string& pair_id) {
  return dir / (pair_id + ".diff.json");
}

}  // namespace idiomperf
