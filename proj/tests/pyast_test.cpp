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
#include "idiomperf/process.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace py = idiomperf::py;

namespace {

const std::vector<std::string> kCorpus = {
    "x = 1\n",
    "a, b = b, a\n",
    "a = b = c\n",
    "x += 1\nx //= 2\n",
    "l = []\nfor e_0 in x_0:\n    l.append(e_0)\n",
    "l = [e_0 if e_0 % 2 else e_0 for e_0 in x_0 if e_0 // 1]\n",
    "d = {k: v for (k, v) in items.items() if k}\n",
    "s = {e for e in range(10) for f in range(e) if f if e}\n",
    "g = sum(x * 2 for x in y)\n",
    "r = c_0 == c_1 and c_1 < c_2\n",
    "r = None is not self.maxlen <= current_length\n",
    "if not a:\n    pass\nelif b:\n    x = 1\nelse:\n    y = 2\n",
    "while a != 0:\n    r = 1\n    break\nelse:\n    r = 2\n",
    "try:\n    assert a != Fraction(0, 1)\nexcept AssertionError as exc:\n    r = 0\nfinally:\n    pass\n",
    "for (e_0, *e_len) in input_seq:\n    r = e_0\n",
    "r = func(*e_list[:2])\nr = func(*e_list[1::2])\nr = x[1:2, ::3]\n",
    "def f(a, b=1, *args, c, d=2, **kw) -> int:\n    return a + b\n",
    "def g(a, /, b):\n    yield a\n    yield from b\n    x = yield\n",
    "@dec\n@dec2(1)\ndef h():\n    pass\n",
    "class C(Base, metaclass=M):\n    def __bool__(self):\n        return False\n",
    "from decimal import Decimal\nimport os.path as p, sys\nfrom . import (a, b,)\n",
    "f = lambda: 0\ng = lambda x, y=2: x if y else -x\n",
    "x = (yield)\n",
    "x = -(-1) ** 2\ny = (-1) ** -2\nz = 2 ** 3 ** 4\nw = (2 ** 3) ** 4\n",
    "x = a - (b - c)\ny = (a - b) - c\nz = a * (b + c)\n",
    "x = not (a and b) or c\ny = (a or b) and c\n",
    "x = (1).real\ny = 1.5.real\n",
    "print(*a, **k, sep='')\n",
    "x = [*a, *b]\ny = {**a, 'k': 1}\nz = (*a,)\n",
    "if (n := len(a)) > 10:\n    pass\n",
    "with open(p) as f, lock:\n    data = f.read()\n",
    "global g\ndel a[0], b\nraise ValueError('x') from None\n",
    "x = 'a' 'b'\ny = b'\\x00'\nz = r'\\d'\nt = '''multi\nline'''\n",
    "x = 0j + 1e-5 + 0x1F + 1_000\n",
    "x = a if b else (c if d else e)\ny = (a if b else c) if d else e\n",
    "for i in range(3): pass\n",
    "x = 1; y = 2\n",
    "x = (a,\n     b)\n",
    "x = a \\\n    + b\n",
    "assert x, 'msg'\n",
    "a, *b = c\n[x, y] = z\n",
    "x = {}\ny = set()\nz = ()\nw = (1,)\n",
    "x = f(a)(b)[c].d\n",
    "x = a < b < c\ny = (a < b) < c\nz = a in b not in c\nw = a is not b\n",
};

// The reference interpreter's own AST dump is the oracle for round-trips.
const char* kAstCompare = R"PY(
import ast, json, sys
pairs = json.load(sys.stdin)
bad = []
for i, (a, b) in enumerate(pairs):
    try:
        if ast.dump(ast.parse(a)) != ast.dump(ast.parse(b)):
            bad.append(i)
    except SyntaxError as e:
        bad.append(i)
print(json.dumps(bad))
)PY";

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

TEST(PyAst, RenderIsIdempotent) {
  for (const auto& src : kCorpus) {
    std::string once = py::render(py::parse(src));
    std::string twice = py::render(py::parse(once));
    EXPECT_EQ(once, twice) << src;
  }
}

TEST(PyAst, RenderPreservesReferenceAst) {
  std::string payload = "[";
  for (std::size_t i = 0; i < kCorpus.size(); ++i) {
    if (i > 0) payload += ",";
    payload += "[" + json_string(kCorpus[i]) + "," + json_string(py::render(py::parse(kCorpus[i]))) + "]";
  }
  payload += "]";
  idiomperf::ProcessOptions opts;
  opts.stdin_data = payload;
  auto r = idiomperf::run_process({idiomperf::resolve_interpreter(), "-I", "-c", kAstCompare}, opts);
  ASSERT_TRUE(r.ok()) << r.err;
  EXPECT_EQ(r.out, "[]\n");
  if (r.out != "[]\n") {
    for (const auto& src : kCorpus) ADD_FAILURE() << src << "=>\n" << py::render(py::parse(src));
  }
}

TEST(PyAst, CanonicalForms) {
  EXPECT_EQ(py::render(py::parse("l=[e_0 for e_0 in x_0]")), "l = [e_0 for e_0 in x_0]\n");
  EXPECT_EQ(py::render(py::parse("for e0,e1 in x: pass")), "for (e0, e1) in x:\n    pass\n");
  EXPECT_EQ(py::render(py::parse_expr("(a)")), "a");
  EXPECT_EQ(py::render(py::parse_expr("a[1:]")), "a[1:]");
}

TEST(PyAst, ShapeOfComprehension) {
  auto e = py::parse_expr("[a for a in b if c for d in a]");
  ASSERT_EQ(e.kind, py::ExprKind::ListComp);
  ASSERT_EQ(e.items.size(), 3u);
  EXPECT_EQ(e.items[1].kind, py::ExprKind::CompFor);
  EXPECT_EQ(e.items[1].items.size(), 3u);  // target, iter, one if
}

TEST(PyAst, LineSpans) {
  auto m = py::parse("x = 1\n\nfor a in b:\n    c = a\n    d = a\ny = 2\n");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[1].line, 3);
  EXPECT_EQ(m[1].end_line, 5);
  EXPECT_EQ(m[2].line, 6);
}

TEST(PyAst, Errors) {
  EXPECT_THROW(py::parse("x = (1"), py::ParseError);
  EXPECT_THROW(py::parse("if x:\ny = 1\n"), py::ParseError);
  EXPECT_THROW(py::parse("x = = 1\n"), py::ParseError);
  EXPECT_THROW(py::parse("  x = 1\n"), py::ParseError);
  EXPECT_THROW(py::parse("x = 'abc\n"), py::ParseError);
}

TEST(PyAst, NamesAndMentions) {
  auto m = py::parse("import os.path\nfrom a import b as c\nx, *y = z\nfor i in r:\n    w = i\ndef f():\n    q = 1\n");
  auto bound = py::bound_names(m);
  for (const char* n : {"os", "c", "x", "y", "i", "w", "f"}) {
    EXPECT_NE(std::find(bound.begin(), bound.end(), n), bound.end()) << n;
  }
  EXPECT_EQ(std::find(bound.begin(), bound.end(), "q"), bound.end());
  EXPECT_TRUE(py::mentions(m, "z"));
  EXPECT_TRUE(py::mentions(m, "q"));
  EXPECT_FALSE(py::mentions(m, "path"));
}
