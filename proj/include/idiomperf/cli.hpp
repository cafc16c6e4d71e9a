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

#include <ostream>
#include <string>
#include <vector>

#include "idiomperf/stats_engine.hpp"

namespace idiomperf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Machine-readable
/// output goes to `out`, progress and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-idiom box summaries as a markdown table.
std::string summary_table(const std::vector<ResultRow>& rows);

/// Per-idiom feature correlation, markdown.
std::string correlation_section(const std::vector<ResultRow>& rows, int permutations, std::uint64_t seed);

}  // namespace idiomperf
