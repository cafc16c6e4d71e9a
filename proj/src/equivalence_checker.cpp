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

#include "idiomperf/equivalence_checker.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "idiomperf/process.hpp"
#include "idiomperf/pyast.hpp"
#include "idiomperf/refactorer.hpp"
#include "idiomperf/synthesizer.hpp"

namespace idiomperf {

using nlohmann::json;

namespace {

// Runs one variant and prints a JSON snapshot of what it left behind.
// Names starting with '_' and functions, classes and modules are skipped;
// sets are printed sorted so the snapshot does not depend on hash order.
constexpr const char* kProbe = R"PY(
import contextlib, hashlib, io, json, random, sys, types

job = json.load(sys.stdin)
skip = (types.FunctionType, types.BuiltinFunctionType, types.ModuleType, type)

def shorten(r):
    if len(r) > 256:
        return 'sha256:%s len=%d' % (hashlib.sha256(r.encode()).hexdigest()[:32], len(r))
    return r

def norm(v):
    if isinstance(v, (set, frozenset)):
        return shorten('%s({%s})' % (type(v).__name__, ', '.join(sorted(norm(x) for x in v))))
    return shorten(repr(v))

g = {'__name__': '__main__', '_size': job['size'], '_rng': random.Random(job['seed'])}
captured = {}
g['_capture'] = captured.update
out = io.StringIO()
try:
    with contextlib.redirect_stdout(out):
        exec(compile(job['setup'], '<setup>', 'exec'), g)
except BaseException as e:
    print(json.dumps({'stage': 'setup', 'error': '%s: %s' % (type(e).__name__, str(e)[:200])}))
    sys.exit(0)

exc = None
try:
    with contextlib.redirect_stdout(out):
        exec(compile(job['source'], '<payload>', 'exec'), g)
        if '_payload' in g:
            g['_payload']()
except BaseException as e:
    exc = type(e).__name__

names = {}
for ns in (g, captured):
    for k, v in ns.items():
        if k.startswith('_') or isinstance(v, skip):
            continue
        names[k] = norm(v)
print(json.dumps({'stage': 'payload', 'exception': exc, 'stdout': shorten(out.getvalue()), 'names': names}))
)PY";

std::string indent_block(const std::string& src, const std::string& pad) {
  std::string out;
  std::size_t start = 0;
  while (start < src.size()) {
    auto end = src.find('\n', start);
    if (end == std::string::npos) end = src.size();
    std::string line = src.substr(start, end - start);
    if (!line.empty()) out += pad + line;
    out += '\n';
    start = end + 1;
  }
  return out;
}

// Local scope: the payload body runs inside a function whose parameters
// default to the setup names it uses, as in the timing runner, and hands its
// locals to the probe even when it raises.
std::string scoped_source(const std::string& source, const std::string& setup, Scope scope) {
  if (scope == Scope::Global) return source;
  std::string body = py::render(py::parse(source));
  std::string params;
  for (const auto& n : shared_names(source, setup)) {
    if (!params.empty()) params += ", ";
    params += n + "=" + n;
  }
  return "def _payload(" + params + "):\n    try:\n" + indent_block(body, "        ") +
         "        pass\n    finally:\n        _capture(locals())\n";
}

struct Snapshot {
  bool setup_failed = false;
  std::string error;
  std::optional<std::string> exception;
  std::string stdout_text;
  std::map<std::string, std::string> names;
};

Snapshot run_variant(const std::string& interpreter, const CodePair& pair, const std::string& source,
                     std::int64_t size, std::uint64_t seed, const CheckOptions& opts) {
  json job = {{"setup", pair.setup_source},
              {"source", scoped_source(source, pair.setup_source, pair.scope_mode)},
              {"size", size},
              {"seed", seed}};
  ProcessOptions popts;
  popts.stdin_data = job.dump();
  popts.timeout = opts.timeout;
  popts.env = scrubbed_environment();
  auto res = run_process({interpreter, "-I", "-S", "-c", kProbe}, popts);
  Snapshot snap;
  if (res.timed_out) {
    snap.setup_failed = true;
    snap.error = "timed out";
    return snap;
  }
  json j;
  try {
    j = json::parse(res.out);
  } catch (const json::exception&) {
    snap.setup_failed = true;
    snap.error = "probe failed (exit " + std::to_string(res.exit_code) + "): " + res.err.substr(0, 400);
    return snap;
  }
  if (j.at("stage") == "setup") {
    snap.setup_failed = true;
    snap.error = j.at("error").get<std::string>();
    return snap;
  }
  if (!j.at("exception").is_null()) snap.exception = j.at("exception").get<std::string>();
  snap.stdout_text = j.at("stdout").get<std::string>();
  snap.names = j.at("names").get<std::map<std::string, std::string>>();
  return snap;
}

std::set<std::string> bound_set(const std::string& source) {
  auto names = py::bound_names(py::parse(source));
  return {names.begin(), names.end()};
}

std::string show(const std::optional<std::string>& s) { return s ? *s : "nothing"; }

// First observable difference, or nullopt. A name bound by only one side is
// ignored when the other source never binds it: loop variables, flags and
// temporaries that the rewrite removes.
std::optional<std::string> compare(const Snapshot& a, const Snapshot& b, const std::set<std::string>& bound_a,
                                   const std::set<std::string>& bound_b) {
  if (a.exception != b.exception) {
    return "raised " + show(a.exception) + " vs " + show(b.exception);
  }
  if (a.stdout_text != b.stdout_text) return "printed output differs";
  for (const auto& [name, value] : a.names) {
    auto it = b.names.find(name);
    if (it == b.names.end()) {
      if (bound_b.count(name) > 0) return "'" + name + "' = " + value + " vs unbound";
      continue;
    }
    if (it->second != value) return "'" + name + "' = " + value + " vs " + it->second;
  }
  for (const auto& [name, value] : b.names) {
    if (a.names.count(name) == 0 && bound_a.count(name) > 0) return "'" + name + "' unbound vs " + value;
  }
  return std::nullopt;
}

std::string negated(const std::string& op) {
  static const std::map<std::string, std::string> table = {
      {"==", "!="}, {"!=", "=="}, {"<", ">="}, {">=", "<"},         {">", "<="},
      {"<=", ">"},  {"is", "is not"}, {"is not", "is"}, {"in", "not in"}, {"not in", "in"}};
  return table.at(op);
}

}  // namespace

std::string_view status_name(EquivalenceStatus s) {
  switch (s) {
    case EquivalenceStatus::Equivalent:
      return "Equivalent";
    case EquivalenceStatus::Divergent:
      return "Divergent";
    case EquivalenceStatus::Error:
      return "Error";
  }
  return "Error";
}

EquivalenceStatus parse_status(std::string_view s) {
  for (auto st : {EquivalenceStatus::Equivalent, EquivalenceStatus::Divergent, EquivalenceStatus::Error}) {
    if (status_name(st) == s) return st;
  }
  throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

json to_json(const EquivalenceReport& r) {
  json j = {{"pair_id", r.pair_id}, {"status", status_name(r.status)}, {"trials", r.trials}};
  if (r.witness) j["witness"] = *r.witness;
  return j;
}

EquivalenceReport report_from_json(const json& j) {
  EquivalenceReport r;
  r.pair_id = j.at("pair_id").get<std::string>();
  r.status = parse_status(j.at("status").get<std::string>());
  r.trials = j.at("trials").get<int>();
  if (j.contains("witness")) r.witness = j.at("witness").get<std::string>();
  return r;
}

std::vector<std::int64_t> trial_sizes(int trials, std::uint64_t seed, std::int64_t max_size) {
  std::vector<std::int64_t> pool;
  for (auto s : kSizeSet) {
    if (s <= max_size) pool.push_back(s);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> out;
  for (int t = 0; t < trials; ++t) {
    if (t < 3) {
      out.push_back(t == 0 ? std::min<std::int64_t>(2, max_size) : t - 1);
    } else {
      out.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    }
  }
  return out;
}

EquivalenceReport check(const CodePair& pair, const CheckOptions& opts) {
  EquivalenceReport report;
  report.pair_id = pair.pair_id;
  report.trials = opts.trials;
  if (pair.idiomatic_source.empty()) {
    report.witness = "idiomatic source is empty";
    return report;
  }
  std::set<std::string> bound_a, bound_b;
  try {
    bound_a = bound_set(pair.non_idiomatic_source);
    bound_b = bound_set(pair.idiomatic_source);
    py::parse(pair.setup_source);
  } catch (const py::ParseError& e) {
    report.witness = std::string("parse error: ") + e.what();
    return report;
  }
  std::string interpreter = resolve_interpreter(opts.interpreter);
  auto sizes = trial_sizes(opts.trials, opts.seed, opts.max_size);
  for (int t = 0; t < opts.trials; ++t) {
    std::uint64_t data_seed = opts.seed * 1'000'003ULL + static_cast<std::uint64_t>(t);
    auto a = run_variant(interpreter, pair, pair.non_idiomatic_source, sizes[t], data_seed, opts);
    auto b = run_variant(interpreter, pair, pair.idiomatic_source, sizes[t], data_seed, opts);
    std::string where = "trial " + std::to_string(t) + " (_size=" + std::to_string(sizes[t]) +
                        ", seed=" + std::to_string(data_seed) + "): ";
    if (a.setup_failed || b.setup_failed) {
      report.status = EquivalenceStatus::Error;
      report.witness = where + (a.setup_failed ? a.error : b.error);
      return report;
    }
    if (auto diff = compare(a, b, bound_a, bound_b)) {
      report.status = EquivalenceStatus::Divergent;
      report.witness = where + *diff;
      return report;
    }
  }
  report.status = EquivalenceStatus::Equivalent;
  return report;
}

std::string inject_fault(std::string_view idiomatic_source, IdiomKind idiom) {
  auto module = py::parse(idiomatic_source);
  bool done = false;

  auto on_exprs = [&](const std::function<bool(py::Expr&)>& fn) {
    std::function<void(std::vector<py::Stmt>&)> visit = [&](std::vector<py::Stmt>& block) {
      for (auto& s : block) {
        for (py::Expr* e : py::own_exprs(s)) {
          py::walk(*e, [&](py::Expr& x) {
            if (!done) done = fn(x);
          });
        }
        visit(s.body);
        visit(s.orelse);
        visit(s.handlers);
        visit(s.finalbody);
      }
    };
    visit(module);
  };
  auto on_stmts = [&](const std::function<bool(py::Stmt&)>& fn) {
    std::function<void(std::vector<py::Stmt>&)> visit = [&](std::vector<py::Stmt>& block) {
      for (auto& s : block) {
        if (done) return;
        done = fn(s);
        visit(s.body);
        visit(s.orelse);
        visit(s.handlers);
        visit(s.finalbody);
      }
    };
    visit(module);
  };

  switch (idiom) {
    case IdiomKind::ListComprehension:
    case IdiomKind::SetComprehension:
    case IdiomKind::DictComprehension:
      // Element (or dict value) plus one.
      on_exprs([](py::Expr& e) {
        if (e.kind != py::ExprKind::ListComp && e.kind != py::ExprKind::SetComp && e.kind != py::ExprKind::DictComp) {
          return false;
        }
        std::size_t at = e.kind == py::ExprKind::DictComp ? 1 : 0;
        e.items[at] = py::make_node(py::ExprKind::BinOp, {e.items[at], py::make_constant("1")}, "+");
        return true;
      });
      break;
    case IdiomKind::ChainComparison:
      on_exprs([](py::Expr& e) {
        if (e.kind != py::ExprKind::Compare || e.ops.size() < 2) return false;
        e.ops.back() = negated(e.ops.back());
        return true;
      });
      break;
    case IdiomKind::TruthValueTest:
      on_stmts([](py::Stmt& s) {
        if (s.kind != py::StmtKind::If && s.kind != py::StmtKind::While && s.kind != py::StmtKind::Assert) {
          return false;
        }
        if (s.value.kind == py::ExprKind::UnaryOp && s.value.text == "not") {
          py::Expr inner = s.value.items[0];
          s.value = std::move(inner);
        } else {
          s.value = py::make_node(py::ExprKind::UnaryOp, {s.value}, "not");
        }
        return true;
      });
      break;
    case IdiomKind::LoopElse:
      // Negate the break condition. Dropping the else clause would also drop
      // every binding it makes, which the scratch-name rule cannot see.
      on_stmts([](py::Stmt& s) {
        if ((s.kind != py::StmtKind::For && s.kind != py::StmtKind::While) || s.orelse.empty()) return false;
        for (auto& inner : s.body) {
          if (inner.kind == py::StmtKind::If && !inner.body.empty() && inner.body.back().kind == py::StmtKind::Break) {
            inner.value = py::make_node(py::ExprKind::UnaryOp, {inner.value}, "not");
            return true;
          }
        }
        return false;
      });
      break;
    case IdiomKind::AssignMultiTargets:
      on_stmts([](py::Stmt& s) {
        if (s.kind != py::StmtKind::Assign || s.value.kind != py::ExprKind::Tuple || s.value.items.size() < 2) {
          return false;
        }
        std::reverse(s.value.items.begin(), s.value.items.end());
        return true;
      });
      break;
    case IdiomKind::StarInFuncCall:
      on_exprs([](py::Expr& e) {
        if (e.kind != py::ExprKind::Call) return false;
        for (std::size_t i = 1; i < e.items.size(); ++i) {
          if (e.items[i].kind == py::ExprKind::Starred) {
            py::Expr inner = e.items[i].items[0];
            e.items[i] = std::move(inner);
            return true;
          }
        }
        return false;
      });
      break;
    case IdiomKind::ForMultiTargets:
      // Iterate in reverse so the last bound element changes.
      on_stmts([](py::Stmt& s) {
        if (s.kind != py::StmtKind::For || s.targets[0].kind != py::ExprKind::Tuple) return false;
        py::Expr rev = py::make_node(py::ExprKind::Slice, {py::Expr{}, py::Expr{}, py::make_constant("-1")});
        s.value = py::make_node(py::ExprKind::Subscript, {s.value, std::move(rev)});
        return true;
      });
      break;
  }
  if (!done) throw NotApplicable(std::string("no ") + std::string(idiom_name(idiom)) + " construct to corrupt");
  return py::render(module);
}

std::filesystem::path report_path(const std::filesystem::path& dir, const std::string& pair_id) {
  return dir / (pair_id + ".check.json");
}

void save_report(const std::filesystem::path& dir, const EquivalenceReport& r) {
  write_file(report_path(dir, r.pair_id), to_json(r).dump(2) + "\n");
}

std::optional<EquivalenceReport> load_report(const std::filesystem::path& dir, const std::string& pair_id) {
  auto path = report_path(dir, pair_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return report_from_json(json::parse(read_file(path)));
}

}  // namespace idiomperf
