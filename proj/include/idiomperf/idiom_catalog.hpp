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
/// The nine idioms, their feature spaces and matrix enumeration.

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace idiomperf {

enum class IdiomKind {
  ListComprehension,
  SetComprehension,
  DictComprehension,
  ChainComparison,
  TruthValueTest,
  LoopElse,
  AssignMultiTargets,
  StarInFuncCall,
  ForMultiTargets,
};

inline constexpr std::array<IdiomKind, 9> kAllIdioms = {
    IdiomKind::ListComprehension, IdiomKind::SetComprehension,   IdiomKind::DictComprehension,
    IdiomKind::ChainComparison,   IdiomKind::TruthValueTest,     IdiomKind::LoopElse,
    IdiomKind::AssignMultiTargets, IdiomKind::StarInFuncCall,    IdiomKind::ForMultiTargets,
};

/// "ListComprehension"
std::string_view idiom_name(IdiomKind idiom);
/// "list-comprehension"
std::string_view idiom_slug(IdiomKind idiom);
/// Accepts either spelling. Throws std::invalid_argument.
IdiomKind parse_idiom(std::string_view text);

bool is_comprehension(IdiomKind idiom);

enum class Scope { Local, Global };
std::string_view scope_name(Scope s);
Scope parse_scope(std::string_view text);

class IllegalFeature : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using FeatureValue = std::variant<std::int64_t, bool, std::string>;

std::string to_string(const FeatureValue& v);
std::ostream& operator<<(std::ostream& os, const FeatureValue& v);

enum class DimType { Count, Flag, Choice };

struct Dimension {
  std::string name;
  DimType type = DimType::Count;
  std::vector<FeatureValue> values;  // legal values in level order
  bool derived = false;  // computed from another dimension, not enumerated

  bool admits(const FeatureValue& v) const;
  /// Position of `v` in `values` (the ordinal encoding); throws when absent.
  std::size_t level(const FeatureValue& v) const;
};

struct FeatureSpace {
  IdiomKind idiom;
  std::vector<Dimension> dims;  // sorted by name

  const Dimension* find(std::string_view name) const;
  /// Dimensions enumerated by the matrix (non-derived), in name order.
  std::vector<const Dimension*> free_dims() const;
};

// Dimension names.
namespace dim {
inline constexpr std::string_view kNumFor = "numFor";
inline constexpr std::string_view kNumIf = "numIf";
inline constexpr std::string_view kNumIfElse = "numIfElse";
inline constexpr std::string_view kCompops = "compops";
inline constexpr std::string_view kNumCompop = "numCompop";
inline constexpr std::string_view kTest = "test";
inline constexpr std::string_view kEqOp = "eqOp";
inline constexpr std::string_view kEmptyValue = "emptyValue";
inline constexpr std::string_view kLoopKind = "loopKind";
inline constexpr std::string_view kConditionKind = "conditionKind";
inline constexpr std::string_view kNumAssign = "numAssign";
inline constexpr std::string_view kIsConst = "isConst";
inline constexpr std::string_view kIsSwap = "isSwap";
inline constexpr std::string_view kNumSubscript = "numSubscript";
inline constexpr std::string_view kHasSubscript = "hasSubscript";
inline constexpr std::string_view kHasStep = "hasStep";
inline constexpr std::string_view kHasLower = "hasLower";
inline constexpr std::string_view kHasUpper = "hasUpper";
inline constexpr std::string_view kNumTarget = "numTarget";
inline constexpr std::string_view kHasStarred = "hasStarred";
inline constexpr std::string_view kScope = "scope";
inline constexpr std::string_view kSize = "size";
inline constexpr std::string_view kIsTrue = "isTrue";
inline constexpr std::string_view kIsBreak = "isBreak";
}  // namespace dim

/// Comparison operators in canonical chain order.
inline constexpr std::array<std::string_view, 10> kCompopSet = {"==", "!=", "<",  "<=", ">",
                                                                 ">=", "is", "is not", "in", "not in"};
/// The fourteen predefined empty values, as Python source.
inline constexpr std::array<std::string_view, 14> kEmptySet = {
    "None", "False", "''", "0", "0.0", "0j", "Decimal(0)", "Fraction(0, 1)", "()", "[]", "{}", "dict()", "set()",
    "range(0)"};
inline constexpr std::array<std::int64_t, 8> kSizeSet = {0, 1, 10, 100, 1000, 10000, 100000, 1000000};

/// Comma-separated operator multiset, e.g. "==, <, is not, in".
std::vector<std::string> split_compops(std::string_view compops);

struct FeatureVector {
  IdiomKind idiom = IdiomKind::ListComprehension;
  std::map<std::string, FeatureValue, std::less<>> values;  // includes "scope"

  bool has(std::string_view name) const;
  const FeatureValue& at(std::string_view name) const;
  std::int64_t count(std::string_view name) const;
  bool flag(std::string_view name) const;
  const std::string& choice(std::string_view name) const;
  Scope scope() const;

  /// Stable "name=value;..." text used for hashing and display.
  std::string canonical() const;

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
    return a.idiom == b.idiom && a.values == b.values;
  }
};

/// Builder that fills derived dimensions and validates.
FeatureVector make_features(IdiomKind idiom, std::map<std::string, FeatureValue, std::less<>> values);

const FeatureSpace& feature_space(IdiomKind idiom);

/// Throws IllegalFeature on foreign or missing fields, out-of-range values,
/// inconsistent derived fields and cross-field constraint violations.
void validate(const FeatureVector& fv);

/// Full synthesis matrix in lexicographic order (dimension names, then level order).
std::vector<FeatureVector> enumerate_matrix(IdiomKind idiom);

/// Deterministic stratified sample of `limit` matrix points: each pick is
/// the point whose dimension values are least represented so far, ties
/// broken by a seeded shuffle. Returns the whole matrix when limit >= size.
std::vector<FeatureVector> sample_matrix(IdiomKind idiom, std::size_t limit, std::uint64_t seed);

/// Number of matrix points without materialising them.
std::size_t matrix_size(IdiomKind idiom);

/// CSV export: header "idiom,<dims sorted by name>", flags as 1/0.
std::string matrix_csv(IdiomKind idiom, const std::vector<FeatureVector>& rows);

}  // namespace idiomperf
