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

#include "idiomperf/stats_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "idiomperf/process.hpp"

using namespace idiomperf;

namespace {

TimingMatrix grid(std::vector<std::vector<double>> t, int warmup, Variant v = Variant::NonIdiomatic) {
  TimingMatrix m;
  m.pair_id = "p";
  m.variant = v;
  m.warmup = warmup;
  m.timings_ns = std::move(t);
  return m;
}

// n x k matrix with invocation-level and iteration-level lognormal noise.
TimingMatrix noisy(double mean, int n, int k, double sigma_inv, double sigma_it, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0, 1);
  std::vector<std::vector<double>> t(static_cast<std::size_t>(n));
  for (auto& row : t) {
    double inv = std::exp(sigma_inv * z(rng));
    for (int j = 0; j < k; ++j) row.push_back(mean * inv * std::exp(sigma_it * z(rng)));
  }
  return grid(std::move(t), 0);
}

TimingMatrix scaled(TimingMatrix m, double s) {
  for (auto& row : m.timings_ns) {
    for (auto& v : row) v *= s;
  }
  return m;
}

}  // namespace

TEST(Stats, RhoHandSummed) {
  // Warmup column excluded: 1+2+3+4 = 10 over 2+1+1+1 = 5.
  auto a = grid({{50, 1, 2}, {70, 3, 4}}, 1);
  auto b = grid({{90, 2, 1}, {10, 1, 1}}, 1, Variant::Idiomatic);
  EXPECT_DOUBLE_EQ(compute_rho(a, b), 2.0);
  EXPECT_DOUBLE_EQ(compute_rho(a, a), 1.0);
  // Two seconds against one: a 2x speedup.
  auto slow = grid({{1e9, 1e9}}, 0);
  auto fast = grid({{5e8, 5e8}}, 0);
  EXPECT_DOUBLE_EQ(compute_rho(slow, fast), 2.0);
}

TEST(Stats, ShapeChecks) {
  auto a = grid({{1, 2, 3}}, 1);
  EXPECT_THROW(compute_rho(a, grid({{1, 2}}, 1)), ShapeMismatch);
  EXPECT_THROW(compute_rho(a, grid({{1, 2, 3}}, 0)), ShapeMismatch);
  EXPECT_THROW(compute_rho(a, grid({{1, 2, 3}, {1, 2, 3}}, 1)), ShapeMismatch);
  EXPECT_THROW(compute_rho(a, grid({{1, 0, 3}}, 1)), std::invalid_argument);
}

TEST(Stats, ConstantTimingsCollapse) {
  std::vector<std::vector<double>> c1(6, std::vector<double>(9, 3.3)), c2(6, std::vector<double>(9, 1.1));
  auto ci = bootstrap_ci(grid(c1, 2), grid(c2, 2), 500, 0.95, 9);
  double rho = compute_rho(grid(c1, 2), grid(c2, 2));
  EXPECT_EQ(ci.ci_low, rho);
  EXPECT_EQ(ci.ci_high, rho);
  EXPECT_EQ(ci.rciw, 0.0);
  auto pc = perf_change(grid(c1, 2), grid(c2, 2), 200);
  EXPECT_EQ(pc.rciw, 0.0);
  EXPECT_EQ(pc.classification, Classification::Speedup);
}

TEST(Stats, SingleReplicate) {
  std::mt19937_64 rng(1);
  auto a = noisy(2, 4, 6, 0.1, 0.1, rng);
  auto b = noisy(1, 4, 6, 0.1, 0.1, rng);
  auto ci = bootstrap_ci(a, b, 1);
  ASSERT_EQ(ci.replicates.size(), 1u);
  EXPECT_EQ(ci.ci_low, ci.replicates[0]);
  EXPECT_EQ(ci.ci_high, ci.replicates[0]);
}

TEST(Stats, NearestRank) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(nearest_rank(v, 0.025), 24.0);
  EXPECT_EQ(nearest_rank(v, 0.975), 974.0);
  EXPECT_EQ(nearest_rank({7.0}, 0.975), 7.0);
  EXPECT_EQ(nearest_rank({1, 2, 3, 4}, 0.5), 2.0);
  EXPECT_THROW(nearest_rank({}, 0.5), EmptyInput);
}

TEST(Stats, ScaleInvariance) {
  std::mt19937_64 rng(5);
  auto a = noisy(3, 5, 8, 0.05, 0.2, rng);
  auto b = noisy(2, 5, 8, 0.05, 0.2, rng);
  auto base = perf_change(a, b, 300, 0.95, 4);
  // Powers of two scale every cell without rounding: bit-identical output.
  for (double s : {0.25, 8.0, 1024.0}) {
    auto pc = perf_change(scaled(a, s), scaled(b, s), 300, 0.95, 4);
    EXPECT_EQ(pc.rho, base.rho);
    EXPECT_EQ(pc.ci_low, base.ci_low);
    EXPECT_EQ(pc.ci_high, base.ci_high);
    EXPECT_EQ(pc.classification, base.classification);
  }
  auto odd = perf_change(scaled(a, 3.7), scaled(b, 3.7), 300, 0.95, 4);
  EXPECT_NEAR(odd.rho, base.rho, 1e-12 * base.rho);
  EXPECT_NEAR(odd.ci_low, base.ci_low, 1e-12 * base.rho);
  EXPECT_EQ(odd.classification, base.classification);
}

TEST(Stats, VariantAntisymmetry) {
  std::mt19937_64 rng(6);
  auto a = noisy(3, 10, 12, 0.03, 0.1, rng);
  auto b = noisy(2, 10, 12, 0.03, 0.1, rng);
  double fwd = compute_rho(a, b);
  double back = compute_rho(b, a);
  EXPECT_NEAR(fwd * back, 1.0, 4 * std::numeric_limits<double>::epsilon());
  // Interval bounds swap as reciprocals up to resampling noise.
  auto ci_f = bootstrap_ci(a, b, 2000, 0.95, 1);
  auto ci_b = bootstrap_ci(b, a, 2000, 0.95, 1);
  EXPECT_NEAR(1 / ci_b.ci_high, ci_f.ci_low, 0.02 * fwd);
  EXPECT_NEAR(1 / ci_b.ci_low, ci_f.ci_high, 0.02 * fwd);
}

TEST(Stats, QuantilesOrderedAndDeterministic) {
  std::mt19937_64 rng(7);
  auto a = noisy(1.2, 6, 10, 0.1, 0.3, rng);
  auto b = noisy(1.0, 6, 10, 0.1, 0.3, rng);
  for (int B : {3, 10, 1000}) {
    auto ci = bootstrap_ci(a, b, B, 0.9, 3);
    double median = nearest_rank(ci.replicates, 0.5);
    EXPECT_LE(ci.ci_low, median);
    EXPECT_LE(median, ci.ci_high);
    EXPECT_TRUE(std::is_sorted(ci.replicates.begin(), ci.replicates.end()));
    EXPECT_EQ(ci.replicates, bootstrap_ci(a, b, B, 0.9, 3).replicates);
  }
  EXPECT_NE(bootstrap_ci(a, b, 50, 0.9, 3).replicates, bootstrap_ci(a, b, 50, 0.9, 4).replicates);
}

// 95% intervals around a known ratio cover it in 90-99% of 200 experiments.
TEST(Stats, MonteCarloCoverage) {
  const double truth = 1.5;
  std::mt19937_64 rng(2026);
  int covered = 0;
  for (int e = 0; e < 200; ++e) {
    auto a = noisy(truth, 20, 15, 0.05, 0.15, rng);
    auto b = noisy(1.0, 20, 15, 0.05, 0.15, rng);
    auto ci = bootstrap_ci(a, b, 1000, 0.95, static_cast<std::uint64_t>(e) * 7919);
    if (ci.ci_low <= truth && truth <= ci.ci_high) ++covered;
  }
  double rate = covered / 200.0;
  RecordProperty("coverage", std::to_string(rate));
  EXPECT_GE(rate, 0.90);
  EXPECT_LE(rate, 0.99);
}

TEST(Stats, Classification) {
  EXPECT_EQ(classify_change(1.1, 1.3), Classification::Speedup);
  EXPECT_EQ(classify_change(0.7, 0.9), Classification::Slowdown);
  EXPECT_EQ(classify_change(0.95, 1.05), Classification::Unchanged);
  EXPECT_EQ(classify_change(1.0, 1.2), Classification::Unchanged);
  EXPECT_EQ(parse_classification("Slowdown"), Classification::Slowdown);
}

TEST(Stats, BoxSummaryExamples) {
  auto s = distribution_summary(std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(s.p25, 1);
  EXPECT_EQ(s.median, 1);
  EXPECT_EQ(s.p75, 1);
  EXPECT_TRUE(s.outliers.empty());

  s = distribution_summary(std::vector<double>{1, 2, 3, 4, 100});
  EXPECT_EQ(s.p25, 2);
  EXPECT_EQ(s.median, 3);
  EXPECT_EQ(s.p75, 4);
  ASSERT_EQ(s.outliers, std::vector<double>{100});
  EXPECT_EQ(s.whisker_low, 1);
  EXPECT_EQ(s.whisker_high, 4);
  EXPECT_EQ(s.max, 100);

  s = distribution_summary(std::vector<double>{2});
  EXPECT_EQ(s.min, 2);
  EXPECT_EQ(s.median, 2);
  EXPECT_EQ(s.max, 2);
  EXPECT_THROW(distribution_summary(std::vector<double>{}), EmptyInput);

  std::vector<PerfChange> pcs(4);
  pcs[0].classification = pcs[1].classification = Classification::Speedup;
  pcs[2].classification = Classification::Slowdown;
  s = distribution_summary(pcs);
  EXPECT_DOUBLE_EQ(s.speedup, 0.5);
  EXPECT_DOUBLE_EQ(s.slowdown, 0.25);
  EXPECT_DOUBLE_EQ(s.unchanged, 0.25);
}

// Quartiles and fences against Python's statistics module on random lists.
TEST(Stats, BoxSummaryMatchesPythonQuantiles) {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> dist(0, 0.8);
  nlohmann::json lists = nlohmann::json::array();
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> v(static_cast<std::size_t>(3 + i * 3));
    for (auto& x : v) x = dist(rng);
    data.push_back(v);
    lists.push_back(v);
  }
  const char* script =
      "import json, sys, statistics\n"
      "out = []\n"
      "for v in json.load(sys.stdin):\n"
      "    q1, q2, q3 = statistics.quantiles(v, n=4, method='inclusive')\n"
      "    lo, hi = q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)\n"
      "    inside = [x for x in v if lo <= x <= hi]\n"
      "    out.append([q1, q2, q3, min(inside), max(inside), sorted(x for x in v if x < lo or x > hi)])\n"
      "print(json.dumps(out))\n";
  ProcessOptions opts;
  opts.stdin_data = lists.dump();
  auto res = run_process({resolve_interpreter(), "-c", script}, opts);
  ASSERT_TRUE(res.ok()) << res.err;
  auto want = nlohmann::json::parse(res.out);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto s = distribution_summary(data[i]);
    EXPECT_NEAR(s.p25, want[i][0].get<double>(), 1e-12);
    EXPECT_NEAR(s.median, want[i][1].get<double>(), 1e-12);
    EXPECT_NEAR(s.p75, want[i][2].get<double>(), 1e-12);
    EXPECT_DOUBLE_EQ(s.whisker_low, want[i][3].get<double>());
    EXPECT_DOUBLE_EQ(s.whisker_high, want[i][4].get<double>());
    EXPECT_EQ(s.outliers, want[i][5].get<std::vector<double>>());
  }
}

TEST(Stats, RanksAndCorrelation) {
  EXPECT_EQ(average_ranks({10, 20, 20, 30}), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_EQ(average_ranks({3, 1, 2}), (std::vector<double>{3, 1, 2}));
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {1, 4, 9, 16}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  // Hand-computed: ranks x = 1..5, y = 2,1,4,3,5 -> 1 - 6*4/(5*24) = 0.8.
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {20, 10, 40, 30, 50}), 0.8, 1e-12);
}

TEST(Stats, FeatureCorrelation) {
  std::vector<std::pair<FeatureVector, double>> rows;
  for (const auto& fv : enumerate_matrix(IdiomKind::ListComprehension)) {
    if (fv.count("numFor") != 1 || fv.count("numIf") != 0 || fv.count("numIfElse") != 0 ||
        fv.scope() != Scope::Local) {
      continue;
    }
    rows.emplace_back(fv, 1.0 + std::log1p(static_cast<double>(fv.count("size"))));
  }
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_THROW(feature_correlation(rows), std::invalid_argument);
  auto extra = rows;
  extra.insert(extra.end(), rows.begin(), rows.begin() + 4);
  auto report = feature_correlation(extra, 200, 1);
  ASSERT_EQ(report.features.size(), 1u);
  EXPECT_EQ(report.features[0].feature, "size");
  EXPECT_NEAR(report.features[0].spearman_rho, 1.0, 1e-12);
  EXPECT_EQ(report.features[0].direction, 1);
  EXPECT_LT(report.features[0].permutation_p, 0.01);
  EXPECT_GE(report.notes.size(), 4u);  // numFor, numIf, numIfElse, scope constant
}

TEST(Stats, CollinearFeaturesDropFirstByName) {
  // In this subset numIf == numIfElse on every row.
  std::vector<std::pair<FeatureVector, double>> rows;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 2);
  for (const auto& fv : enumerate_matrix(IdiomKind::SetComprehension)) {
    if (fv.count("numIf") == fv.count("numIfElse") && fv.count("numFor") == 2) rows.emplace_back(fv, u(rng));
  }
  auto report = feature_correlation(rows, 100, 1);
  ASSERT_FALSE(report.collinear.empty());
  EXPECT_EQ(report.collinear[0].first, "numIf");
  EXPECT_EQ(report.collinear[0].second, "numIfElse");
  EXPECT_EQ(report.collinear[0].dropped, "numIf");
  for (const auto& f : report.features) EXPECT_NE(f.feature, "numIf");
}

TEST(Stats, CompopsExpandToCounts) {
  auto all = enumerate_matrix(IdiomKind::ChainComparison);
  auto enc = encode_features(all.front());
  double total = 0;
  for (auto op : kCompopSet) total += enc.at("compops[" + std::string(op) + "]");
  EXPECT_EQ(total, static_cast<double>(all.front().count("numCompop")));
  EXPECT_EQ(enc.count("compops"), 0u);
}

TEST(Stats, ResultsCsvRoundTrip) {
  auto fv = enumerate_matrix(IdiomKind::ChainComparison)[123];
  ResultRow a;
  a.pair_id = "chain-comparison-0001";
  a.idiom = "ChainComparison";
  for (const auto& [k, v] : fv.values) a.features[k] = to_string(v);
  a.change = PerfChange{1.0 / 3.0, 0.3, 0.4, 0.3, Classification::Slowdown, 1000, 0.95};
  ResultRow b;
  b.pair_id = "ext-1";
  b.idiom = "external";
  b.change = PerfChange{2.5, 2.1, 2.9, 0.32, Classification::Speedup, 1000, 0.95};
  std::string text = results_csv({a, b});
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "pair_id,idiom,compops,isTrue,numCompop,scope,rho,ci_low,ci_high,rciw,classification");
  auto back = parse_results_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].features, a.features);
  EXPECT_EQ(back[0].change.rho, a.change.rho);
  EXPECT_EQ(back[0].change.classification, Classification::Slowdown);
  EXPECT_TRUE(back[1].features.empty());
  auto typed = row_features(back[0]);
  ASSERT_TRUE(typed.has_value());
  EXPECT_EQ(*typed, fv);
  EXPECT_FALSE(row_features(back[1]).has_value());
}
