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
/// Detection and rewriting of non-idiomatic sites for the nine idioms.
/// Rewrites operate on the parsed tree and re-render canonical source.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "idiomperf/code_pair.hpp"

namespace idiomperf {

class NotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Site {
  IdiomKind idiom;
  int first_line = 0;
  int last_line = 0;
  std::string snippet;  // canonical source of the matched region
};

/// Static facts about names the source reads but does not bind, usually
/// gathered from the setup code.
struct RefactorContext {
  std::map<std::string, std::int64_t, std::less<>> int_constants;
  std::map<std::string, std::int64_t, std::less<>> sequence_lengths;
  /// Length of every element of a sequence of equal-length tuples.
  std::map<std::string, std::int64_t, std::less<>> element_lengths;
  /// Synthesis features; they pin down otherwise free rendering choices
  /// (slice components, starred loop targets).
  std::optional<FeatureVector> features;
};

/// `size` is the value of `_size` while the setup runs.
RefactorContext analyze_setup(const std::string& setup, std::int64_t size = 0);
RefactorContext context_for(const CodePair& pair);

/// All sites, in source order. Throws py::ParseError.
std::vector<Site> detect(std::string_view source, const RefactorContext& ctx = {});

/// Rewrites every site of `idiom`. Returns the canonical rendering unchanged
/// when there is nothing to rewrite; throws NotApplicable when candidate
/// sites exist but all fail the idiom's preconditions.
std::string refactor(std::string_view source, IdiomKind idiom, const RefactorContext& ctx = {});

/// Fills pair.idiomatic_source. Throws NotApplicable unless at least one
/// site of pair.idiom is rewritten.
void refactor_pair(CodePair& pair);

}  // namespace idiomperf
