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

#include "idiomperf/idiom_catalog.hpp"

#include <algorithm>
#include <random>

#include "idiomperf/csv.hpp"

namespace idiomperf {

namespace {

struct IdiomNames {
  IdiomKind kind;
  std::string_view name;
  std::string_view slug;
};

constexpr std::array<IdiomNames, 9> kNames = {{
    {IdiomKind::ListComprehension, "ListComprehension", "list-comprehension"},
    {IdiomKind::SetComprehension, "SetComprehension", "set-comprehension"},
    {IdiomKind::DictComprehension, "DictComprehension", "dict-comprehension"},
    {IdiomKind::ChainComparison, "ChainComparison", "chain-comparison"},
    {IdiomKind::TruthValueTest, "TruthValueTest", "truth-value-test"},
    {IdiomKind::LoopElse, "LoopElse", "loop-else"},
    {IdiomKind::AssignMultiTargets, "AssignMultiTargets", "assign-multi-targets"},
    {IdiomKind::StarInFuncCall, "StarInFuncCall", "star-in-func-call"},
    {IdiomKind::ForMultiTargets, "ForMultiTargets", "for-multi-targets"},
}};

Dimension count_dim(std::string_view name, std::int64_t lo, std::int64_t hi) {
  Dimension d{std::string(name), DimType::Count, {}, false};
  for (std::int64_t v = lo; v <= hi; ++v) d.values.emplace_back(v);
  return d;
}

Dimension flag_dim(std::string_view name) {
  return Dimension{std::string(name), DimType::Flag, {FeatureValue(false), FeatureValue(true)}, false};
}

template <typename Range>
Dimension choice_dim(std::string_view name, const Range& levels) {
  Dimension d{std::string(name), DimType::Choice, {}, false};
  for (const auto& l : levels) d.values.emplace_back(std::string(l));
  return d;
}

Dimension size_dim() {
  Dimension d{std::string(dim::kSize), DimType::Count, {}, false};
  for (auto s : kSizeSet) d.values.emplace_back(s);
  return d;
}

Dimension scope_dim() { return choice_dim(dim::kScope, std::array<std::string_view, 2>{"Local", "Global"}); }

// Multisets of 2..5 operators, each rendered in canonical CompopSet order.
std::vector<std::string> compop_multisets() {
  std::vector<std::string> out;
  const int n = static_cast<int>(kCompopSet.size());
  for (int len = 2; len <= 5; ++len) {
    std::vector<int> idx(static_cast<std::size_t>(len), 0);
    while (true) {
      std::string s;
      for (int k = 0; k < len; ++k) {
        if (k > 0) s += ", ";
        s += kCompopSet[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      }
      out.push_back(std::move(s));
      int pos = len - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - 1) --pos;
      if (pos < 0) break;
      int v = idx[static_cast<std::size_t>(pos)] + 1;
      for (int k = pos; k < len; ++k) idx[static_cast<std::size_t>(k)] = v;
    }
  }
  return out;
}

FeatureSpace build_space(IdiomKind idiom) {
  FeatureSpace fs{idiom, {}};
  auto& d = fs.dims;
  switch (idiom) {
    case IdiomKind::ListComprehension:
    case IdiomKind::SetComprehension:
    case IdiomKind::DictComprehension:
      d = {count_dim(dim::kNumFor, 1, 4), count_dim(dim::kNumIf, 0, 4), count_dim(dim::kNumIfElse, 0, 4),
           scope_dim(), size_dim()};
      break;
    case IdiomKind::ChainComparison: {
      Dimension num = count_dim(dim::kNumCompop, 2, 5);
      num.derived = true;
      d = {choice_dim(dim::kCompops, compop_multisets()), num, scope_dim(), flag_dim(dim::kIsTrue)};
      break;
    }
    case IdiomKind::TruthValueTest:
      d = {choice_dim(dim::kTest, std::array<std::string_view, 3>{"While", "Assert", "If"}),
           choice_dim(dim::kEqOp, std::array<std::string_view, 2>{"==", "!="}), choice_dim(dim::kEmptyValue, kEmptySet),
           scope_dim(), flag_dim(dim::kIsTrue)};
      break;
    case IdiomKind::LoopElse:
      d = {choice_dim(dim::kLoopKind, std::array<std::string_view, 2>{"for", "while"}),
           choice_dim(dim::kConditionKind, std::array<std::string_view, 2>{"if", "if-else"}), scope_dim(), size_dim(),
           flag_dim(dim::kIsBreak)};
      break;
    case IdiomKind::AssignMultiTargets:
      d = {count_dim(dim::kNumAssign, 2, 30), flag_dim(dim::kIsConst), flag_dim(dim::kIsSwap), scope_dim()};
      break;
    case IdiomKind::StarInFuncCall:
      d = {count_dim(dim::kNumSubscript, 1, 30), flag_dim(dim::kHasSubscript), flag_dim(dim::kHasStep),
           flag_dim(dim::kHasLower), flag_dim(dim::kHasUpper), flag_dim(dim::kIsConst), scope_dim()};
      break;
    case IdiomKind::ForMultiTargets:
      d = {count_dim(dim::kNumSubscript, 1, 30), count_dim(dim::kNumTarget, 1, 5), flag_dim(dim::kHasStarred),
           scope_dim(), size_dim()};
      break;
  }
  std::sort(d.begin(), d.end(), [](const Dimension& a, const Dimension& b) { return a.name < b.name; });
  return fs;
}

// Cross-field constraints beyond per-dimension ranges.
bool admissible(IdiomKind idiom, const std::map<std::string, FeatureValue, std::less<>>& values) {
  if (idiom == IdiomKind::AssignMultiTargets) {
    auto c = values.find(dim::kIsConst);
    auto s = values.find(dim::kIsSwap);
    if (c != values.end() && s != values.end() && std::get<bool>(c->second) && std::get<bool>(s->second)) {
      return false;
    }
  }
  return true;
}

void fill_derived(IdiomKind idiom, std::map<std::string, FeatureValue, std::less<>>& values) {
  if (idiom == IdiomKind::ChainComparison) {
    auto it = values.find(dim::kCompops);
    if (it != values.end() && std::holds_alternative<std::string>(it->second)) {
      values[std::string(dim::kNumCompop)] =
          static_cast<std::int64_t>(split_compops(std::get<std::string>(it->second)).size());
    }
  }
}

}  // namespace

std::string_view idiom_name(IdiomKind idiom) {
  for (const auto& n : kNames) {
    if (n.kind == idiom) return n.name;
  }
  return "?";
}

std::string_view idiom_slug(IdiomKind idiom) {
  for (const auto& n : kNames) {
    if (n.kind == idiom) return n.slug;
  }
  return "?";
}

IdiomKind parse_idiom(std::string_view text) {
  for (const auto& n : kNames) {
    if (n.name == text || n.slug == text) return n.kind;
  }
  throw std::invalid_argument("unknown idiom '" + std::string(text) + "'");
}

bool is_comprehension(IdiomKind idiom) {
  return idiom == IdiomKind::ListComprehension || idiom == IdiomKind::SetComprehension ||
         idiom == IdiomKind::DictComprehension;
}

std::string_view scope_name(Scope s) { return s == Scope::Local ? "Local" : "Global"; }

Scope parse_scope(std::string_view text) {
  if (text == "Local") return Scope::Local;
  if (text == "Global") return Scope::Global;
  throw std::invalid_argument("unknown scope '" + std::string(text) + "'");
}

std::string to_string(const FeatureValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  return std::get<std::string>(v);
}

std::ostream& operator<<(std::ostream& os, const FeatureValue& v) { return os << to_string(v); }

bool Dimension::admits(const FeatureValue& v) const {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::size_t Dimension::level(const FeatureValue& v) const {
  auto it = std::find(values.begin(), values.end(), v);
  if (it == values.end()) throw IllegalFeature(name + ": illegal value " + to_string(v));
  return static_cast<std::size_t>(it - values.begin());
}

const Dimension* FeatureSpace::find(std::string_view name) const {
  for (const auto& d : dims) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

std::vector<const Dimension*> FeatureSpace::free_dims() const {
  std::vector<const Dimension*> out;
  for (const auto& d : dims) {
    if (!d.derived) out.push_back(&d);
  }
  return out;
}

std::vector<std::string> split_compops(std::string_view compops) {
  std::vector<std::string> ops;
  std::string cur;
  auto flush = [&] {
    auto b = cur.find_first_not_of(' ');
    auto e = cur.find_last_not_of(' ');
    if (b != std::string::npos) ops.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (char c : compops) {
    if (c == ',') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return ops;
}

bool FeatureVector::has(std::string_view name) const { return values.find(name) != values.end(); }

const FeatureValue& FeatureVector::at(std::string_view name) const {
  auto it = values.find(name);
  if (it == values.end()) {
    throw IllegalFeature(std::string(idiom_name(idiom)) + " has no feature '" + std::string(name) + "'");
  }
  return it->second;
}

std::int64_t FeatureVector::count(std::string_view name) const {
  const auto* v = std::get_if<std::int64_t>(&at(name));
  if (v == nullptr) throw IllegalFeature(std::string(name) + " is not a count");
  return *v;
}

bool FeatureVector::flag(std::string_view name) const {
  const auto* v = std::get_if<bool>(&at(name));
  if (v == nullptr) throw IllegalFeature(std::string(name) + " is not a flag");
  return *v;
}

const std::string& FeatureVector::choice(std::string_view name) const {
  const auto* v = std::get_if<std::string>(&at(name));
  if (v == nullptr) throw IllegalFeature(std::string(name) + " is not a choice");
  return *v;
}

Scope FeatureVector::scope() const { return parse_scope(choice(dim::kScope)); }

std::string FeatureVector::canonical() const {
  std::string out(idiom_name(idiom));
  for (const auto& [k, v] : values) out += ";" + k + "=" + to_string(v);
  return out;
}

FeatureVector make_features(IdiomKind idiom, std::map<std::string, FeatureValue, std::less<>> values) {
  fill_derived(idiom, values);
  FeatureVector fv{idiom, std::move(values)};
  validate(fv);
  return fv;
}

const FeatureSpace& feature_space(IdiomKind idiom) {
  static const std::array<FeatureSpace, 9> spaces = [] {
    std::array<FeatureSpace, 9> out;
    for (std::size_t i = 0; i < kAllIdioms.size(); ++i) out[i] = build_space(kAllIdioms[i]);
    return out;
  }();
  return spaces[static_cast<std::size_t>(idiom)];
}

void validate(const FeatureVector& fv) {
  const FeatureSpace& fs = feature_space(fv.idiom);
  std::string who(idiom_name(fv.idiom));
  for (const auto& [name, value] : fv.values) {
    const Dimension* d = fs.find(name);
    if (d == nullptr) throw IllegalFeature(who + ": feature '" + name + "' is not defined for this idiom");
    if (!d->admits(value)) throw IllegalFeature(who + ": " + name + "=" + to_string(value) + " is out of range");
  }
  for (const auto& d : fs.dims) {
    if (!fv.has(d.name)) throw IllegalFeature(who + ": missing feature '" + d.name + "'");
  }
  auto derived = fv.values;
  fill_derived(fv.idiom, derived);
  if (derived != fv.values) throw IllegalFeature(who + ": derived feature inconsistent with its source");
  if (!admissible(fv.idiom, fv.values)) throw IllegalFeature(who + ": isConst=1 cannot be combined with isSwap=1");
}

std::vector<FeatureVector> enumerate_matrix(IdiomKind idiom) {
  const FeatureSpace& fs = feature_space(idiom);
  auto dims = fs.free_dims();
  std::vector<std::size_t> idx(dims.size(), 0);
  std::vector<FeatureVector> out;
  while (true) {
    std::map<std::string, FeatureValue, std::less<>> values;
    for (std::size_t k = 0; k < dims.size(); ++k) values.emplace(dims[k]->name, dims[k]->values[idx[k]]);
    if (admissible(idiom, values)) {
      fill_derived(idiom, values);
      out.push_back(FeatureVector{idiom, std::move(values)});
    }
    // Odometer: the last dimension varies fastest.
    std::size_t pos = dims.size();
    while (pos > 0) {
      --pos;
      if (++idx[pos] < dims[pos]->values.size()) break;
      idx[pos] = 0;
      if (pos == 0) return out;
    }
    if (dims.empty()) return out;
  }
}

std::vector<FeatureVector> sample_matrix(IdiomKind idiom, std::size_t limit, std::uint64_t seed) {
  auto all = enumerate_matrix(idiom);
  if (limit >= all.size()) return all;
  std::shuffle(all.begin(), all.end(), std::mt19937_64(seed));
  std::map<std::string, std::size_t> seen;  // "dim=value" -> picks so far
  auto key = [](const std::string& dim, const FeatureValue& v) { return dim + "=" + to_string(v); };
  std::vector<bool> taken(all.size(), false);
  std::vector<FeatureVector> out;
  while (out.size() < limit) {
    std::size_t best = all.size();
    std::size_t best_score = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (taken[i]) continue;
      std::size_t score = 0;
      for (const auto& [dim, v] : all[i].values) {
        auto it = seen.find(key(dim, v));
        if (it != seen.end()) score += it->second;
      }
      if (best == all.size() || score < best_score) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    for (const auto& [dim, v] : all[best].values) ++seen[key(dim, v)];
    out.push_back(all[best]);
  }
  return out;
}

std::size_t matrix_size(IdiomKind idiom) { return enumerate_matrix(idiom).size(); }

std::string matrix_csv(IdiomKind idiom, const std::vector<FeatureVector>& rows) {
  const FeatureSpace& fs = feature_space(idiom);
  csv::Row header{"idiom"};
  for (const auto& d : fs.dims) header.push_back(d.name);
  std::string out = csv::format_row(header);
  for (const auto& fv : rows) {
    csv::Row r{std::string(idiom_name(fv.idiom))};
    for (const auto& d : fs.dims) r.push_back(to_string(fv.at(d.name)));
    out += csv::format_row(r);
  }
  return out;
}

}  // namespace idiomperf
