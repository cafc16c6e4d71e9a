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

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace idiomperf {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  int signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;

  bool ok() const { return exit_code == 0 && !timed_out; }
};

struct ProcessOptions {
  std::string stdin_data;
  std::chrono::milliseconds timeout{std::chrono::minutes(2)};
  /// When set, the child sees exactly this environment ("KEY=VALUE").
  std::optional<std::vector<std::string>> env;
  std::filesystem::path cwd;
};

/// Runs argv[0] (looked up on PATH) and collects both output streams.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts = {});

/// Scratch directory removed (recursively) on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "idiomperf");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const;

 private:
  std::filesystem::path path_;
};

/// Interpreter resolution order: TARGET_INTERPRETER, then `configured`, then python3.
std::string resolve_interpreter(const std::string& configured = {});

/// "3.10.12"-style version string reported by the interpreter itself.
std::string interpreter_version(const std::string& interpreter);

/// (major, minor) parsed from interpreter_version.
std::pair<int, int> interpreter_minor(const std::string& interpreter);

/// Minimal environment for measured children: PATH and a fixed locale.
std::vector<std::string> scrubbed_environment();

std::string host_id();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace idiomperf
