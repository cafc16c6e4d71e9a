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
/// Timing matrices and their JSON Lines store.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace idiomperf {

enum class Variant { NonIdiomatic, Idiomatic };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

/// n invocations by k iterations of per-iteration durations. Iterations with
/// index < warmup are stored but excluded from statistics.
struct TimingMatrix {
  std::string pair_id;
  Variant variant = Variant::NonIdiomatic;
  int warmup = 0;
  std::vector<std::vector<double>> timings_ns;
  std::string interpreter_id;
  std::string host_id;

  std::size_t n() const { return timings_ns.size(); }
  std::size_t k() const { return timings_ns.empty() ? 0 : timings_ns.front().size(); }

  /// Throws std::invalid_argument unless the grid is non-empty, rectangular,
  /// strictly positive and 0 <= warmup < k.
  void validate() const;
};

/// One line of the store: a single invocation of one variant.
struct TimingRecord {
  std::string pair_id;
  Variant variant = Variant::NonIdiomatic;
  int invocation = 0;
  std::vector<double> timings_ns;
  std::string interpreter_id;
  std::string host_id;
  int warmup = 0;
  std::int64_t reps = 1;  // payload repetitions per timed iteration
};

nlohmann::json to_json(const TimingRecord& r);
TimingRecord record_from_json(const nlohmann::json& j);

/// Append-only JSON Lines file. Keys already present are remembered so an
/// interrupted run can resume where it stopped.
class TimingStore {
 public:
  explicit TimingStore(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  /// All records in file order. A truncated last line (interrupted write)
  /// is skipped; any other malformed line throws.
  std::vector<TimingRecord> load() const;
  bool has(const std::string& pair_id, Variant v, int invocation) const;
  void append(const TimingRecord& r);

 private:
  std::filesystem::path path_;
  std::set<std::tuple<std::string, int, int>> keys_;
};

struct MatrixPair {
  TimingMatrix non_idiomatic;
  TimingMatrix idiomatic;
};

/// Complete pairs only: both variants with invocations 0..n-1 present, the
/// same n, k and warmup. Incomplete pairs are left out; the first record
/// wins for duplicated keys.
std::map<std::string, MatrixPair> assemble(const std::vector<TimingRecord>& records);

}  // namespace idiomperf
