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

#include <gtest/gtest.h>

#include <json.hpp>

#include "idiomperf/process.hpp"
#include "idiomperf/pyast.hpp"
#include "idiomperf/synthesizer.hpp"

using namespace idiomperf;
using nlohmann::json;

namespace {

std::string canon(const std::string& src) { return py::render(py::parse(src)); }

std::string rf(const std::string& src, IdiomKind k, const RefactorContext& ctx = {}) {
  return refactor(src, k, ctx);
}

// The defining construct of each idiom, checked on the parsed output.
bool has_construct(const std::string& src, IdiomKind k) {
  auto m = py::parse(src);
  bool found = false;
  py::walk_stmts(m, [&](const py::Stmt& s) {
    switch (k) {
      case IdiomKind::TruthValueTest:
        if ((s.kind == py::StmtKind::If || s.kind == py::StmtKind::While || s.kind == py::StmtKind::Assert) &&
            s.value.kind != py::ExprKind::Compare) {
          found = true;
        }
        break;
      case IdiomKind::LoopElse:
        if ((s.kind == py::StmtKind::For || s.kind == py::StmtKind::While) && !s.orelse.empty()) found = true;
        break;
      case IdiomKind::AssignMultiTargets:
        if (s.kind == py::StmtKind::Assign && s.targets.size() == 1 &&
            s.targets[0].kind == py::ExprKind::Tuple && s.value.kind == py::ExprKind::Tuple) {
          found = true;
        }
        break;
      case IdiomKind::ForMultiTargets:
        if (s.kind == py::StmtKind::For && s.targets[0].kind == py::ExprKind::Tuple) found = true;
        break;
      default:
        break;
    }
  });
  py::walk_exprs(m, [&](const py::Expr& e) {
    switch (k) {
      case IdiomKind::ListComprehension:
        found = found || e.kind == py::ExprKind::ListComp;
        break;
      case IdiomKind::SetComprehension:
        found = found || e.kind == py::ExprKind::SetComp;
        break;
      case IdiomKind::DictComprehension:
        found = found || e.kind == py::ExprKind::DictComp;
        break;
      case IdiomKind::ChainComparison:
        found = found || (e.kind == py::ExprKind::Compare && e.ops.size() >= 2);
        break;
      case IdiomKind::StarInFuncCall:
        if (e.kind == py::ExprKind::Call) {
          for (std::size_t i = 1; i < e.items.size(); ++i) found = found || e.items[i].kind == py::ExprKind::Starred;
        }
        break;
      default:
        break;
    }
  });
  return found;
}

}  // namespace

TEST(Refactorer, DetectExamples) {
  auto sites = detect("l=[]\nfor e in xs:\n    l.append(e)\n");
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].idiom, IdiomKind::ListComprehension);
  EXPECT_EQ(sites[0].first_line, 1);
  EXPECT_EQ(sites[0].last_line, 3);

  sites = detect("n != o and o >= p\n");
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].idiom, IdiomKind::ChainComparison);

  EXPECT_TRUE(detect("x = 1\n").empty());
}

TEST(Refactorer, ComprehensionExamples) {
  EXPECT_EQ(rf("l=[]\nfor e_0 in x_0:\n    l.append(e_0)\n", IdiomKind::ListComprehension),
            canon("l = [e_0 for e_0 in x_0]\n"));
  EXPECT_EQ(rf("s = set()\nfor a in x:\n    for b in y:\n        if a < b:\n            s.add(a + b)\n",
               IdiomKind::SetComprehension),
            canon("s = {a + b for a in x for b in y if a < b}\n"));
  EXPECT_EQ(rf("d = {}\nfor k in x:\n    if k % 2:\n        d[k] = 1\n    else:\n        d[k] = 2\n",
               IdiomKind::DictComprehension),
            canon("d = {k: 1 if k % 2 else 2 for k in x}\n"));
}

TEST(Refactorer, ComprehensionPreconditions) {
  // Extra statement in the body.
  EXPECT_THROW(rf("l = []\nfor e in x:\n    print(e)\n    l.append(e)\n", IdiomKind::ListComprehension),
               NotApplicable);
  // Accumulator read in the loop.
  EXPECT_THROW(rf("l = []\nfor e in x:\n    l.append(len(l))\n", IdiomKind::ListComprehension), NotApplicable);
  // Loop variable read afterwards: comprehension scoping would change it.
  EXPECT_THROW(rf("l = []\nfor e in x:\n    l.append(e)\nprint(e)\n", IdiomKind::ListComprehension),
               NotApplicable);
  // Differing dict keys across branches.
  EXPECT_THROW(rf("d = {}\nfor k in x:\n    if k:\n        d[k] = 1\n    else:\n        d[0] = 2\n",
                  IdiomKind::DictComprehension),
               NotApplicable);
}

TEST(Refactorer, ChainExamples) {
  EXPECT_EQ(rf("r = n != o and o >= p\n", IdiomKind::ChainComparison), canon("r = n != o >= p\n"));
  EXPECT_EQ(rf("r = self.maxlen is not None and current_length >= self.maxlen\n", IdiomKind::ChainComparison),
            canon("r = None is not self.maxlen <= current_length\n"));
  // Partial chains keep the unrelated operand.
  EXPECT_EQ(rf("r = a < b and b < c and x\n", IdiomKind::ChainComparison), canon("r = a < b < c and x\n"));
  // `in` cannot be flipped, a call operand would be evaluated twice.
  EXPECT_TRUE(detect("r = a in b and c in a\n").empty());
  EXPECT_TRUE(detect("r = a < f() and f() < c\n").empty());
}

TEST(Refactorer, TruthExamples) {
  EXPECT_EQ(rf("if inter != 0:\n    pass\n", IdiomKind::TruthValueTest), canon("if inter:\n    pass\n"));
  EXPECT_EQ(rf("if a == []:\n    pass\n", IdiomKind::TruthValueTest), canon("if not a:\n    pass\n"));
  EXPECT_EQ(rf("assert None != a\n", IdiomKind::TruthValueTest), canon("assert a\n"));
  EXPECT_TRUE(detect("if a == 1:\n    pass\n").empty());
}

TEST(Refactorer, LoopElseExample) {
  const char* src =
      "found = False\n"
      "for e in x:\n"
      "    if e == t:\n"
      "        found = True\n"
      "        break\n"
      "if found:\n"
      "    r = 1\n"
      "else:\n"
      "    r = 0\n";
  const char* want =
      "for e in x:\n"
      "    if e == t:\n"
      "        r = 1\n"
      "        break\n"
      "else:\n"
      "    r = 0\n";
  EXPECT_EQ(rf(src, IdiomKind::LoopElse), canon(want));

  // Flag read afterwards.
  std::string later = std::string(src) + "print(found)\n";
  EXPECT_THROW(rf(later, IdiomKind::LoopElse), NotApplicable);
  // A second break.
  EXPECT_THROW(rf("f = True\nfor e in x:\n    if e:\n        f = False\n        break\n    if e > 3:\n        break\n"
                  "if f:\n    r = 1\n",
                  IdiomKind::LoopElse),
               NotApplicable);
}

TEST(Refactorer, AssignExamples) {
  EXPECT_EQ(rf("a = 1\nb = 2\n", IdiomKind::AssignMultiTargets), canon("a, b = 1, 2\n"));
  EXPECT_EQ(rf("t = a\na = b\nb = t\n", IdiomKind::AssignMultiTargets), canon("a, b = b, a\n"));
  // Dependent values are left alone.
  EXPECT_TRUE(detect("a = 1\nb = a\n").empty());
  // A temporary that outlives the swap blocks the rotation; the independent
  // prefix still merges.
  EXPECT_EQ(rf("t = a\na = b\nb = t\nprint(t)\n", IdiomKind::AssignMultiTargets),
            canon("t, a = a, b\nb = t\nprint(t)\n"));
}

TEST(Refactorer, StarExamples) {
  RefactorContext ctx;
  EXPECT_EQ(rf("func(e_list[0], e_list[1])\n", IdiomKind::StarInFuncCall, ctx), canon("func(*e_list[:2])\n"));
  ctx.sequence_lengths["e_list"] = 2;
  EXPECT_EQ(rf("func(e_list[0], e_list[1])\n", IdiomKind::StarInFuncCall, ctx), canon("func(*e_list)\n"));
  ctx.sequence_lengths["e_list"] = 6;
  EXPECT_EQ(rf("func(e_list[1], e_list[3], e_list[5])\n", IdiomKind::StarInFuncCall, ctx),
            canon("func(*e_list[1::2])\n"));
  ctx.int_constants["i"] = 3;
  EXPECT_EQ(rf("func(x, e_list[i])\n", IdiomKind::StarInFuncCall, ctx), canon("func(x, *e_list[3:4])\n"));
  EXPECT_THROW(rf("func(e_list[j])\n", IdiomKind::StarInFuncCall, ctx), NotApplicable);
}

TEST(Refactorer, ForMultiExamples) {
  EXPECT_EQ(rf("for e in input_seq:\n    r = e[0]\n", IdiomKind::ForMultiTargets),
            canon("for (e_0, *e_len) in input_seq:\n    r = e_0\n"));
  RefactorContext ctx;
  ctx.element_lengths["xs"] = 2;
  EXPECT_EQ(rf("for e in xs:\n    r = e[1], e[0]\n", IdiomKind::ForMultiTargets, ctx),
            canon("for (e_0, e_1) in xs:\n    r = e_1, e_0\n"));
  EXPECT_THROW(rf("for e in xs:\n    r = e\n    q = e[0]\n", IdiomKind::ForMultiTargets), NotApplicable);
  EXPECT_THROW(rf("for e in xs:\n    r = e[0]\nprint(e)\n", IdiomKind::ForMultiTargets), NotApplicable);
}

TEST(Refactorer, SetupAnalysis) {
  auto ctx = analyze_setup("n = 4\nxs = list(range(_size))\nys = [(a, a + 1) for a in range(n)]\nz = [1, 2]\n", 10);
  EXPECT_EQ(ctx.int_constants.at("n"), 4);
  EXPECT_EQ(ctx.sequence_lengths.at("xs"), 10);
  EXPECT_EQ(ctx.sequence_lengths.at("ys"), 4);
  EXPECT_EQ(ctx.element_lengths.at("ys"), 2);
  EXPECT_EQ(ctx.sequence_lengths.at("z"), 2);
  EXPECT_FALSE(analyze_setup("z = [1]\nz.append(2)\n").sequence_lengths.count("z"));
}

TEST(Refactorer, NothingToDoReturnsCanonical) {
  EXPECT_EQ(rf("x  =  1\n", IdiomKind::ListComprehension), canon("x = 1\n"));
}

// Every synthesized vector refactors, carries the idiom's construct, and the
// output is a fixed point with no remaining site of that idiom.
TEST(Refactorer, WholeMatrixFidelityAndIdempotence) {
  std::map<IdiomKind, int> done;
  for (IdiomKind k : kAllIdioms) {
    for (const auto& fv : enumerate_matrix(k)) {
      CodePair pair = synthesize(fv);
      ASSERT_NO_THROW(refactor_pair(pair)) << fv.canonical();
      ASSERT_TRUE(has_construct(pair.idiomatic_source, k)) << fv.canonical() << "\n" << pair.idiomatic_source;
      auto ctx = context_for(pair);
      ASSERT_EQ(refactor(pair.idiomatic_source, k, ctx), pair.idiomatic_source) << fv.canonical();
      for (const auto& s : detect(pair.idiomatic_source, ctx)) {
        ASSERT_NE(s.idiom, k) << fv.canonical() << "\n" << pair.idiomatic_source;
      }
      ++done[k];
    }
  }
  EXPECT_EQ(done.size(), kAllIdioms.size());
}

// Outputs of a sample from every idiom run under the interpreter and leave
// the same visible names as the input.
TEST(Refactorer, SampleBehaviourMatches) {
  json items = json::array();
  for (IdiomKind k : kAllIdioms) {
    auto all = enumerate_matrix(k);
    for (std::size_t i = 0; i < all.size(); i += std::max<std::size_t>(1, all.size() / 40)) {
      CodePair pair = synthesize(all[i]);
      refactor_pair(pair);
      items.push_back({{"setup", pair.setup_source},
                       {"a", pair.non_idiomatic_source},
                       {"b", pair.idiomatic_source},
                       {"size", std::min<std::int64_t>(pair.size, 50)}});
    }
  }
  const char* script = R"PY(
import json, sys
bad = []
def run(setup, body, size):
    g = {'_size': size, '_rng': None}
    exec(setup, g)
    exec(body, g)
    return {k: repr(v) for k, v in g.items() if not k.startswith('_') and not callable(v)
            and type(v).__name__ != 'module'}
for it in json.load(sys.stdin):
    a = run(it['setup'], it['a'], it['size'])
    b = run(it['setup'], it['b'], it['size'])
    for k in set(a) & set(b):
        if a[k] != b[k]:
            bad.append([it['b'], k, a[k], b[k]])
print(json.dumps(bad[:3]))
)PY";
  TempDir dir;
  auto path = dir.write("check.py", script);
  ProcessOptions opts;
  opts.stdin_data = items.dump();
  auto res = run_process({resolve_interpreter(""), path}, opts);
  ASSERT_TRUE(res.ok()) << res.err;
  EXPECT_EQ(json::parse(res.out), json::array()) << res.out;
}
