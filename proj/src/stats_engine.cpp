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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "idiomperf/csv.hpp"

namespace idiomperf {

namespace {

using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Measured cells (iterations >= warmup), one row per invocation.
Grid measured(const TimingMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.n());
  const auto k = static_cast<Eigen::Index>(m.k()) - m.warmup;
  Grid g(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = m.timings_ns[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = row[static_cast<std::size_t>(j + m.warmup)];
  }
  return g;
}

void check_shapes(const TimingMatrix& a, const TimingMatrix& b) {
  a.validate();
  b.validate();
  if (a.n() != b.n() || a.k() != b.k() || a.warmup != b.warmup) {
    throw ShapeMismatch(fmt::format("timing shapes differ: {}x{} warmup {} vs {}x{} warmup {}", a.n(), a.k(),
                                    a.warmup, b.n(), b.k(), b.warmup));
  }
}

// Sequential row-major sum. The bootstrap uses the same order of additions,
// so constant data gives bit-identical replicates and point estimate.
double total(const Grid& g) {
  double s = 0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) s += g(i, j);
  }
  return s;
}

double ratio(double num, double den) {
  if (!(den > 0)) throw ZeroDenominator("idiomatic total is not positive");
  return num / den;
}

double resampled_total(const Grid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<Eigen::Index> pick_row(0, g.rows() - 1);
  std::uniform_int_distribution<Eigen::Index> pick_col(0, g.cols() - 1);
  double s = 0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    Eigen::Index r = pick_row(rng);
    for (Eigen::Index j = 0; j < g.cols(); ++j) s += g(r, pick_col(rng));
  }
  return s;
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::string_view classification_name(Classification c) {
  switch (c) {
    case Classification::Speedup:
      return "Speedup";
    case Classification::Slowdown:
      return "Slowdown";
    case Classification::Unchanged:
      return "Unchanged";
  }
  return "Unchanged";
}

Classification parse_classification(std::string_view s) {
  for (auto c : {Classification::Speedup, Classification::Slowdown, Classification::Unchanged}) {
    if (classification_name(c) == s) return c;
  }
  throw std::invalid_argument("unknown classification '" + std::string(s) + "'");
}

double compute_rho(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic) {
  check_shapes(non_idiomatic, idiomatic);
  return ratio(total(measured(non_idiomatic)), total(measured(idiomatic)));
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw EmptyInput("quantile of empty data");
  // The small slack keeps p * size from landing just above an integer
  // through representation error (0.975 * 1000).
  double pos = std::ceil(p * static_cast<double>(sorted.size()) - 1e-9) - 1;
  auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(sorted.size() - 1)));
  return sorted[idx];
}

double interpolated_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw EmptyInput("quantile of empty data");
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic, int B,
                             double confidence, std::uint64_t seed) {
  check_shapes(non_idiomatic, idiomatic);
  if (B < 1) throw std::invalid_argument("bootstrap count must be >= 1");
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must be in (0, 1)");
  Grid a = measured(non_idiomatic);
  Grid b = measured(idiomatic);
  double rho = ratio(total(a), total(b));

  BootstrapResult out;
  out.replicates.resize(static_cast<std::size_t>(B));
  for (int r = 0; r < B; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    double sa = resampled_total(a, rng);
    double sb = resampled_total(b, rng);
    out.replicates[static_cast<std::size_t>(r)] = ratio(sa, sb);
  }
  std::sort(out.replicates.begin(), out.replicates.end());
  out.ci_low = nearest_rank(out.replicates, (1 - confidence) / 2);
  out.ci_high = nearest_rank(out.replicates, (1 + confidence) / 2);
  out.rciw = (out.ci_high - out.ci_low) / rho;
  return out;
}

Classification classify_change(double ci_low, double ci_high) {
  if (ci_low > 1) return Classification::Speedup;
  if (ci_high < 1) return Classification::Slowdown;
  return Classification::Unchanged;
}

PerfChange perf_change(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic, int B, double confidence,
                       std::uint64_t seed) {
  PerfChange pc;
  pc.rho = compute_rho(non_idiomatic, idiomatic);
  auto ci = bootstrap_ci(non_idiomatic, idiomatic, B, confidence, seed);
  pc.ci_low = ci.ci_low;
  pc.ci_high = ci.ci_high;
  pc.rciw = ci.rciw;
  pc.classification = classify_change(pc.ci_low, pc.ci_high);
  pc.n_bootstrap = B;
  pc.confidence = confidence;
  return pc;
}

BoxSummary distribution_summary(std::vector<double> rhos) {
  if (rhos.empty()) throw EmptyInput("distribution summary of no values");
  std::sort(rhos.begin(), rhos.end());
  BoxSummary s;
  s.count = rhos.size();
  s.min = rhos.front();
  s.max = rhos.back();
  s.p25 = interpolated_quantile(rhos, 0.25);
  s.median = interpolated_quantile(rhos, 0.5);
  s.p75 = interpolated_quantile(rhos, 0.75);
  double iqr = s.p75 - s.p25;
  double lo_fence = s.p25 - 1.5 * iqr;
  double hi_fence = s.p75 + 1.5 * iqr;
  s.whisker_low = s.max;
  s.whisker_high = s.min;
  for (double v : rhos) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

BoxSummary distribution_summary(const std::vector<PerfChange>& changes) {
  std::vector<double> rhos;
  std::array<std::size_t, 3> counts{};
  for (const auto& c : changes) {
    rhos.push_back(c.rho);
    ++counts[static_cast<std::size_t>(c.classification)];
  }
  BoxSummary s = distribution_summary(std::move(rhos));
  double n = static_cast<double>(changes.size());
  s.speedup = static_cast<double>(counts[static_cast<std::size_t>(Classification::Speedup)]) / n;
  s.slowdown = static_cast<double>(counts[static_cast<std::size_t>(Classification::Slowdown)]) / n;
  s.unchanged = static_cast<double>(counts[static_cast<std::size_t>(Classification::Unchanged)]) / n;
  return s;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson needs two equal-length series");
  Eigen::Map<const Eigen::ArrayXd> a(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::Map<const Eigen::ArrayXd> b(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::ArrayXd da = a - a.mean();
  Eigen::ArrayXd db = b - b.mean();
  double den = std::sqrt((da * da).sum() * (db * db).sum());
  if (den == 0) return 0;
  return (da * db).sum() / den;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

std::map<std::string, double> encode_features(const FeatureVector& fv) {
  std::map<std::string, double> out;
  const FeatureSpace& fs = feature_space(fv.idiom);
  for (const auto& d : fs.dims) {
    if (!fv.has(d.name)) continue;
    if (d.name == dim::kCompops) {
      for (auto op : kCompopSet) out[fmt::format("compops[{}]", op)] = 0;
      for (const auto& op : split_compops(fv.choice(d.name))) out[fmt::format("compops[{}]", op)] += 1;
      continue;
    }
    const FeatureValue& v = fv.at(d.name);
    switch (d.type) {
      case DimType::Count:
        out[d.name] = static_cast<double>(std::get<std::int64_t>(v));
        break;
      case DimType::Flag:
        out[d.name] = std::get<bool>(v) ? 1.0 : 0.0;
        break;
      case DimType::Choice:
        out[d.name] = static_cast<double>(d.level(v));
        break;
    }
  }
  return out;
}

CorrelationReport feature_correlation(const std::vector<std::pair<FeatureVector, double>>& rows, int permutations,
                                      std::uint64_t seed) {
  if (rows.size() < 10) throw std::invalid_argument("feature correlation needs at least 10 rows");
  if (permutations < 1) throw std::invalid_argument("permutation count must be >= 1");
  std::vector<double> y;
  std::map<std::string, std::vector<double>> columns;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].second > 0)) throw std::invalid_argument("rho must be positive");
    y.push_back(std::log(rows[i].second));
    for (const auto& [name, v] : encode_features(rows[i].first)) columns[name].resize(rows.size(), 0.0);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [name, v] : encode_features(rows[i].first)) columns[name][i] = v;
  }

  CorrelationReport report;
  std::set<std::string> dropped;
  for (auto it = columns.begin(); it != columns.end();) {
    const auto& col = it->second;
    if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); })) {
      report.notes.push_back(it->first + ": constant across rows, skipped");
      it = columns.erase(it);
    } else {
      ++it;
    }
  }
  for (auto a = columns.begin(); a != columns.end(); ++a) {
    if (dropped.count(a->first) > 0) continue;
    for (auto b = std::next(a); b != columns.end(); ++b) {
      if (dropped.count(b->first) > 0) continue;
      double r = pearson(a->second, b->second);
      double vif = r * r >= 1 ? std::numeric_limits<double>::infinity() : 1 / (1 - r * r);
      if (vif > 5) {
        report.collinear.push_back({a->first, b->first, vif, a->first});
        dropped.insert(a->first);
        report.notes.push_back(fmt::format("{}: collinear with {} (VIF {:.3g}), dropped", a->first, b->first, vif));
        break;
      }
    }
  }

  std::vector<double> ry = average_ranks(y);
  std::mt19937_64 rng(seed);
  for (const auto& [name, col] : columns) {
    if (dropped.count(name) > 0) continue;
    std::vector<double> rx = average_ranks(col);
    double rho = pearson(rx, ry);
    std::vector<double> shuffled = ry;
    int hits = 0;
    for (int p = 0; p < permutations; ++p) {
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      if (std::abs(pearson(rx, shuffled)) >= std::abs(rho) - 1e-12) ++hits;
    }
    FeatureCorrelation fc;
    fc.feature = name;
    fc.spearman_rho = rho;
    fc.permutation_p = (1.0 + hits) / (1.0 + permutations);
    fc.direction = rho > 0 ? 1 : (rho < 0 ? -1 : 0);
    report.features.push_back(fc);
  }
  return report;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::set<std::string> feature_names;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.features) feature_names.insert(k);
  }
  csv::Row header{"pair_id", "idiom"};
  header.insert(header.end(), feature_names.begin(), feature_names.end());
  for (const char* c : {"rho", "ci_low", "ci_high", "rciw", "classification"}) header.emplace_back(c);
  std::string out = csv::format_row(header);
  for (const auto& r : rows) {
    csv::Row line{r.pair_id, r.idiom};
    for (const auto& f : feature_names) {
      auto it = r.features.find(f);
      line.push_back(it == r.features.end() ? "" : it->second);
    }
    line.push_back(number(r.change.rho));
    line.push_back(number(r.change.ci_low));
    line.push_back(number(r.change.ci_high));
    line.push_back(number(r.change.rciw));
    line.emplace_back(classification_name(r.change.classification));
    out += csv::format_row(line);
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  csv::Table t(text);
  const auto& h = t.header();
  int rho_col = t.column("rho");
  if (t.column("pair_id") != 0 || t.column("idiom") != 1 || rho_col < 2) {
    throw std::invalid_argument("results file: expected pair_id, idiom, features..., rho, ...");
  }
  std::vector<ResultRow> out;
  for (const auto& row : t.rows()) {
    ResultRow r;
    r.pair_id = row[0];
    r.idiom = row[1];
    for (int c = 2; c < rho_col; ++c) {
      if (!row[static_cast<std::size_t>(c)].empty()) r.features[h[static_cast<std::size_t>(c)]] = row[static_cast<std::size_t>(c)];
    }
    try {
      r.change.rho = std::stod(t.get(row, "rho"));
      r.change.ci_low = std::stod(t.get(row, "ci_low"));
      r.change.ci_high = std::stod(t.get(row, "ci_high"));
      r.change.rciw = std::stod(t.get(row, "rciw"));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("results file: bad number in row for " + r.pair_id);
    }
    r.change.classification = parse_classification(t.get(row, "classification"));
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<FeatureVector> row_features(const ResultRow& row) {
  IdiomKind idiom;
  try {
    idiom = parse_idiom(row.idiom);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  const FeatureSpace& fs = feature_space(idiom);
  std::map<std::string, FeatureValue, std::less<>> values;
  for (const auto& d : fs.dims) {
    if (d.derived) continue;
    auto it = row.features.find(d.name);
    if (it == row.features.end()) return std::nullopt;
    const std::string& cell = it->second;
    try {
      switch (d.type) {
        case DimType::Count:
          values.emplace(d.name, static_cast<std::int64_t>(std::stoll(cell)));
          break;
        case DimType::Flag:
          if (cell != "0" && cell != "1") return std::nullopt;
          values.emplace(d.name, cell == "1");
          break;
        case DimType::Choice:
          values.emplace(d.name, cell);
          break;
      }
    } catch (const std::logic_error&) {
      return std::nullopt;
    }
  }
  try {
    return make_features(idiom, std::move(values));
  } catch (const IllegalFeature&) {
    return std::nullopt;
  }
}

}  // namespace idiomperf
