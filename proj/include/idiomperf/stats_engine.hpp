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
/// Performance change between two timing matrices, its bootstrap
/// confidence interval, and summaries over many pairs.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idiomperf/idiom_catalog.hpp"
#include "idiomperf/timing.hpp"

namespace idiomperf {

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ZeroDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};
class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Classification { Speedup, Slowdown, Unchanged };

std::string_view classification_name(Classification c);
Classification parse_classification(std::string_view s);

struct PerfChange {
  double rho = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double rciw = 0.0;
  Classification classification = Classification::Unchanged;
  int n_bootstrap = 0;
  double confidence = 0.95;
};

/// Sum of measured non-idiomatic durations over sum of measured idiomatic
/// durations. Both matrices must share n, k and warmup.
double compute_rho(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic);

struct BootstrapResult {
  double ci_low = 0;
  double ci_high = 0;
  double rciw = 0;
  std::vector<double> replicates;  // sorted
};

/// Two-level resampling: invocations with replacement, then measured
/// iterations with replacement inside each drawn invocation. Replicate b
/// draws from its own generator seeded with seed + b. Bounds are
/// nearest-rank quantiles at (1 -/+ confidence) / 2; rciw is relative to
/// the point estimate.
BootstrapResult bootstrap_ci(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic, int B = 1000,
                             double confidence = 0.95, std::uint64_t seed = 0);

/// Speedup iff ci_low > 1, Slowdown iff ci_high < 1.
Classification classify_change(double ci_low, double ci_high);

PerfChange perf_change(const TimingMatrix& non_idiomatic, const TimingMatrix& idiomatic, int B = 1000,
                       double confidence = 0.95, std::uint64_t seed = 0);

/// Nearest-rank quantile of sorted data: element ceil(p * size) - 1.
double nearest_rank(const std::vector<double>& sorted, double p);

/// Linearly interpolated quantile of sorted data (the common "type 7").
double interpolated_quantile(const std::vector<double>& sorted, double p);

struct BoxSummary {
  std::size_t count = 0;
  double min = 0, p25 = 0, median = 0, p75 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;  // extreme values inside the 1.5 IQR fences
  std::vector<double> outliers;              // ascending
  // Shares of classifications in [0, 1]; zero when built from bare values.
  double speedup = 0, slowdown = 0, unchanged = 0;
};

BoxSummary distribution_summary(std::vector<double> rhos);
BoxSummary distribution_summary(const std::vector<PerfChange>& changes);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& x);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct FeatureCorrelation {
  std::string feature;
  double spearman_rho = 0;
  double permutation_p = 1;
  int direction = 0;  // sign of spearman_rho
};

struct CollinearPair {
  std::string first, second;
  double vif = 0;
  std::string dropped;
};

struct CorrelationReport {
  std::vector<FeatureCorrelation> features;  // in feature name order
  std::vector<CollinearPair> collinear;
  std::vector<std::string> notes;  // skipped features and why
};

/// Numeric encoding of a feature vector: counts as is, flags 0/1, choices by
/// level, and the comparison-operator multiset as one count per operator
/// ("compops[<=]").
std::map<std::string, double> encode_features(const FeatureVector& fv);

/// Spearman correlation of each feature against ln(rho) with a permutation
/// p-value (1 + hits) / (1 + permutations). Needs at least 10 rows.
/// Feature pairs with pairwise VIF 1 / (1 - r^2) above 5 are reported and
/// the first name of the pair is dropped.
CorrelationReport feature_correlation(const std::vector<std::pair<FeatureVector, double>>& rows,
                                      int permutations = 1000, std::uint64_t seed = 0);

/// One line of the results file.
struct ResultRow {
  std::string pair_id;
  std::string idiom;                            // IdiomName, or the ingested tag
  std::map<std::string, std::string> features;  // raw cells; empty for ingested pairs
  PerfChange change;
};

/// pair_id, idiom, feature columns (union, sorted), rho, ci_low, ci_high,
/// rciw, classification. Numbers use 17 significant digits.
std::string results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

/// Typed features of a result row; nullopt for rows without a known idiom
/// or with incomplete feature cells.
std::optional<FeatureVector> row_features(const ResultRow& row);

}  // namespace idiomperf
