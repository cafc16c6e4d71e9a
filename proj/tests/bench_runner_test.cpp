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

#include "idiomperf/bench_runner.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "idiomperf/process.hpp"

using namespace idiomperf;

namespace {

CodePair pair_of(std::string setup, std::string a, std::string b, Scope scope = Scope::Local) {
  CodePair p;
  p.pair_id = "bench-" + fnv1a64_hex(setup + a + b);
  p.idiom = IdiomKind::AssignMultiTargets;
  p.setup_source = std::move(setup);
  p.non_idiomatic_source = std::move(a);
  p.idiomatic_source = std::move(b);
  p.scope_mode = scope;
  return p;
}

BenchConfig quick(int n, int k, int warmup) {
  BenchConfig cfg;
  cfg.n_invocations = n;
  cfg.k_iterations = k;
  cfg.warmup = warmup;
  cfg.target_iteration_ns = 2e5;
  return cfg;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(BenchRunner, Defaults) {
  BenchConfig cfg;
  EXPECT_EQ(cfg.n_invocations, 50);
  EXPECT_EQ(cfg.k_iterations, 35);
  EXPECT_EQ(cfg.warmup, 3);
  auto desk = desk_config();
  EXPECT_EQ(desk.n_invocations, 5);
  EXPECT_EQ(desk.k_iterations, 10);
  EXPECT_EQ(desk.warmup, 3);
  EXPECT_THROW(quick(0, 4, 0).validate(), std::invalid_argument);
  EXPECT_THROW(quick(1, 3, 3).validate(), std::invalid_argument);
  EXPECT_NO_THROW(quick(1, 4, 3).validate());
}

TEST(BenchRunner, MinimalConfigAndPassPayload) {
  auto p = pair_of("", "pass\n", "pass\n");
  auto m = measure(p, quick(1, 4, 3));
  for (const auto* t : {&m.non_idiomatic, &m.idiomatic}) {
    EXPECT_EQ(t->n(), 1u);
    EXPECT_EQ(t->k(), 4u);
    EXPECT_EQ(t->warmup, 3);
    for (double v : t->timings_ns[0]) EXPECT_GT(v, 0.0);
    EXPECT_FALSE(t->interpreter_id.empty());
    EXPECT_FALSE(t->host_id.empty());
  }
}

TEST(BenchRunner, CalibrationReachesTarget) {
  auto p = pair_of("", "pass\n", "pass\n");
  BenchConfig cfg = quick(1, 2, 0);
  cfg.target_iteration_ns = 1e6;
  EXPECT_GT(calibrate(p, cfg), 1000);
  cfg.reps = 7;
  EXPECT_EQ(calibrate(p, cfg), 7);
}

// A module attribute set by one invocation must not be visible in the next.
TEST(BenchRunner, FreshProcessPerInvocation) {
  auto p = pair_of("import json\nassert not hasattr(json, 'touched')\n", "json.touched = 1\n",
                   "json.touched = 2\n", Scope::Global);
  BenchConfig cfg = quick(3, 2, 0);
  cfg.reps = 10;
  EXPECT_NO_THROW(measure(p, cfg));
}

TEST(BenchRunner, StoreInterleavesAndResumes) {
  TempDir dir;
  auto path = dir.path() / "t.jsonl";
  auto p = pair_of("a = 1\nb = 2\n", "t = a\na = b\nb = t\n", "a, b = b, a\n");
  BenchConfig cfg = quick(2, 3, 1);
  cfg.reps = 50;
  {
    TimingStore store(path);
    measure(p, cfg, &store);
  }
  auto first = lines_of(path);
  ASSERT_EQ(first.size(), 4u);
  std::vector<std::pair<std::string, int>> order;
  for (const auto& l : first) {
    auto j = nlohmann::json::parse(l);
    order.emplace_back(j.at("variant").get<std::string>(), j.at("invocation").get<int>());
    EXPECT_EQ(j.at("timings_ns").size(), 3u);
    EXPECT_EQ(j.at("warmup"), 1);
  }
  std::vector<std::pair<std::string, int>> want = {
      {"NonIdiomatic", 0}, {"Idiomatic", 0}, {"NonIdiomatic", 1}, {"Idiomatic", 1}};
  EXPECT_EQ(order, want);

  cfg.n_invocations = 3;
  TimingStore store(path);
  EXPECT_TRUE(store.has(p.pair_id, Variant::Idiomatic, 1));
  EXPECT_FALSE(store.has(p.pair_id, Variant::Idiomatic, 2));
  auto m = measure(p, cfg, &store);
  EXPECT_EQ(lines_of(path).size(), 6u);
  auto stored = assemble(store.load());
  ASSERT_EQ(stored.count(p.pair_id), 1u);
  EXPECT_EQ(stored.at(p.pair_id).idiomatic.timings_ns, m.idiomatic.timings_ns);
  EXPECT_EQ(stored.at(p.pair_id).non_idiomatic.n(), 3u);

  // Different k against existing records is refused.
  cfg.k_iterations = 5;
  EXPECT_THROW(measure(p, cfg, &store), BenchError);
}

// Raising warmup changes what statistics read, never the stored width.
TEST(BenchRunner, WarmupDoesNotChangeGridWidth) {
  auto p = pair_of("", "x = 1\n", "x = 1\n");
  BenchConfig cfg = quick(1, 5, 3);
  cfg.reps = 100;
  EXPECT_EQ(measure(p, cfg).idiomatic.k(), 5u);
  cfg.warmup = 0;
  EXPECT_EQ(measure(p, cfg).idiomatic.k(), 5u);
}

TEST(BenchRunner, ChildFailures) {
  BenchConfig cfg = quick(1, 2, 0);
  cfg.reps = 1;
  try {
    measure(pair_of("", "x = 1 / 0\n", "x = 1\n"), cfg);
    FAIL() << "expected ChildCrash";
  } catch (const ChildCrash& e) {
    EXPECT_NE(std::string(e.what()).find("ZeroDivisionError"), std::string::npos) << e.what();
  }
  cfg.timeout = std::chrono::milliseconds(1500);
  EXPECT_THROW(measure(pair_of("", "while True:\n    pass\n", "pass\n"), cfg), Timeout);
  EXPECT_THROW(measure(pair_of("", "pass\n", ""), cfg), BenchError);
}

TEST(TimingStore, AssembleSkipsIncompleteAndTruncated) {
  TempDir dir;
  auto path = dir.path() / "s.jsonl";
  {
    TimingStore s(path);
    s.append({"p", Variant::NonIdiomatic, 0, {1, 2}, "3.10", "h", 0, 1});
    s.append({"p", Variant::Idiomatic, 0, {1, 1}, "3.10", "h", 0, 1});
    s.append({"q", Variant::NonIdiomatic, 0, {1, 2}, "3.10", "h", 0, 1});
    s.append({"q", Variant::NonIdiomatic, 1, {1, 2}, "3.10", "h", 0, 1});
    s.append({"q", Variant::Idiomatic, 1, {1, 2}, "3.10", "h", 0, 1});
    s.append({"q", Variant::Idiomatic, 2, {1, 2}, "3.10", "h", 0, 1});
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{\"pair_id\": \"p\", \"varia";  // interrupted write
  }
  TimingStore s(path);
  auto recs = s.load();
  EXPECT_EQ(recs.size(), 6u);
  auto m = assemble(recs);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at("p").non_idiomatic.timings_ns[0], (std::vector<double>{1, 2}));
  EXPECT_NO_THROW(m.at("p").idiomatic.validate());

  TimingMatrix bad;
  bad.timings_ns = {{1, 0}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.timings_ns = {{1, 2}, {1}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
