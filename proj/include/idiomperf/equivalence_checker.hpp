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
/// Differential testing of the two halves of a CodePair. Every trial runs
/// each variant in its own interpreter process on identical seeded data and
/// compares what the run leaves behind.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "idiomperf/code_pair.hpp"

namespace idiomperf {

enum class EquivalenceStatus { Equivalent, Divergent, Error };

std::string_view status_name(EquivalenceStatus s);
EquivalenceStatus parse_status(std::string_view s);

struct EquivalenceReport {
  std::string pair_id;
  EquivalenceStatus status = EquivalenceStatus::Error;
  int trials = 0;
  std::optional<std::string> witness;
};

nlohmann::json to_json(const EquivalenceReport& r);
EquivalenceReport report_from_json(const nlohmann::json& j);

struct CheckOptions {
  int trials = 5;
  std::uint64_t seed = 0;
  std::string interpreter;  // empty: resolve_interpreter()
  std::chrono::milliseconds timeout{60'000};
  /// Upper bound on sampled data sizes. Larger sizes add run time without
  /// exercising new control flow in the templates.
  std::int64_t max_size = 10'000;
};

/// Data sizes for each trial: 2, 0, 1, then seeded draws from kSizeSet
/// capped at max_size.
std::vector<std::int64_t> trial_sizes(int trials, std::uint64_t seed, std::int64_t max_size);

EquivalenceReport check(const CodePair& pair, const CheckOptions& opts = {});

/// A semantic fault in the idiomatic form of `idiom`, used to confirm the
/// checker catches it. Throws NotApplicable when the source has no site.
std::string inject_fault(std::string_view idiomatic_source, IdiomKind idiom);

/// `<dir>/<pair_id>.check.json`
std::filesystem::path report_path(const std::filesystem::path& dir, const std::string& pair_id);
void save_report(const std::filesystem::path& dir, const EquivalenceReport& r);
std::optional<EquivalenceReport> load_report(const std::filesystem::path& dir, const std::string& pair_id);

}  // namespace idiomperf
