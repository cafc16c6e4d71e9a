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
/// Runs both variants of a pair in fresh interpreter processes and records
/// per-iteration timings.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "idiomperf/code_pair.hpp"
#include "idiomperf/timing.hpp"

namespace idiomperf {

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Child exited abnormally; the message carries its stderr.
class ChildCrash : public BenchError {
 public:
  using BenchError::BenchError;
};
/// A recorded duration was zero.
class ClockResolution : public BenchError {
 public:
  using BenchError::BenchError;
};
class Timeout : public BenchError {
 public:
  using BenchError::BenchError;
};

struct BenchConfig {
  int n_invocations = 50;
  int k_iterations = 35;
  int warmup = 3;
  std::string interpreter;  // empty: resolve_interpreter()
  bool scrub_environment = true;
  std::filesystem::path working_directory;  // empty: a fresh temporary directory
  std::uint64_t seed = 0;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  /// Minimum duration of one timed iteration; the payload is repeated
  /// until it is reached.
  double target_iteration_ns = 1e6;
  /// Skip calibration and use this repetition count.
  std::optional<std::int64_t> reps;

  /// Throws std::invalid_argument on n < 1, k < 1 or warmup outside [0, k).
  void validate() const;
};

/// Desk-scale protocol for CI and quick runs: n=5, k=10, warmup=3, 10 ms iterations.
BenchConfig desk_config();

using BenchLog = std::function<void(const std::string&)>;

/// Repetitions per timed iteration: the larger of the two variants'
/// calibrated counts, so both run the same amplification.
std::int64_t calibrate(const CodePair& pair, const BenchConfig& cfg);

/// Measures both variants, invocations interleaved A, B, A, B, ... When a
/// store is given, every finished invocation is appended to it and
/// invocations already present are read back instead of re-run.
MatrixPair measure(const CodePair& pair, const BenchConfig& cfg, TimingStore* store = nullptr,
                   const BenchLog& log = {});

}  // namespace idiomperf
