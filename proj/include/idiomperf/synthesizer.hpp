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
/// Template rendering of feature vectors into non-idiomatic source, and the
/// module wrapper that turns a payload into a runnable timing script.
///
/// Setup code may read two harness-provided names: `_size` (element count)
/// and `_rng` (a `random.Random` instance, or None when data stay ordered).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "idiomperf/code_pair.hpp"

namespace idiomperf {

inline constexpr std::string_view kTemplateVersion = "v1";

/// "<idiom-slug>-<16 hex digits>", a pure function of idiom, features and template version.
std::string make_pair_id(const FeatureVector& fv);

/// Non-idiomatic half plus setup; idiomatic_source is left empty.
CodePair synthesize(const FeatureVector& fv);

struct RunnerOptions {
  int iterations = 1;
  std::int64_t reps = 1;
  /// When set, the script ignores `reps` and instead doubles an inner
  /// repetition count until one iteration takes at least this long, then
  /// prints {"reps": r}.
  std::optional<double> calibrate_ns;
  std::int64_t size = 0;
  std::optional<std::uint64_t> shuffle_seed;
};

/// Setup-bound names the payload reads; Local mode binds them as defaults
/// of the payload function so that they load as locals.
std::vector<std::string> shared_names(const std::string& payload, const std::string& setup);

/// Runnable module: harness preamble, setup (untimed), then the payload
/// either inside `def _payload()` (Local) or at module level (Global),
/// amplified by an inner loop and timed per iteration. Prints exactly one
/// JSON line {"timings_ns": [...]} on the real stdout.
/// Throws py::ParseError when payload or setup do not parse.
std::string wrap_scope(const std::string& payload, const std::string& setup, Scope scope,
                       const RunnerOptions& opts = {});

}  // namespace idiomperf
