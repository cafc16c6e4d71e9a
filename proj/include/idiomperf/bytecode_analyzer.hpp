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
/// Bytecode of both halves of a pair, their difference, and a root-cause
/// label for the performance change.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "idiomperf/code_pair.hpp"

namespace idiomperf {

class CompileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UnsupportedInterpreter : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class Unclassifiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Instruction {
  std::string opname;  // after the version alias table
  std::string argrepr;  // code object addresses stripped
  std::string code;  // name of the code object it belongs to

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// Interpreter versions whose opcode names the oracles are written against.
bool pinned_interpreter(std::pair<int, int> version);

/// Renames opcodes of other interpreter versions to their pinned-version
/// spelling (directional jumps, COPY/SWAP, 3.12 method loads). Returns an
/// empty string for bookkeeping opcodes that are dropped (CACHE, RESUME,
/// PRECALL, EXTENDED_ARG, NOP).
std::string alias_opcode(std::string_view opname, std::string_view arg, std::string_view argrepr);

/// Key under which an opcode is counted in a diff. Conditional jumps are
/// folded over their polarity and unconditional jumps over direction.
std::string diff_key(std::string_view opname);

/// Parses the textual output of the interpreter's disassembler.
/// Throws UnsupportedInterpreter on lines it cannot read.
std::vector<Instruction> parse_dis(std::string_view text);

/// Source that is disassembled for one half: the payload as compiled by the
/// timing runner, inside `def _payload(...)` for Local scope.
std::string disassembly_source(const std::string& payload, const std::string& setup, Scope scope);

struct Disassembly {
  std::vector<Instruction> non_idiomatic;
  std::vector<Instruction> idiomatic;
  std::string interpreter_id;
};

Disassembly disassemble(const CodePair& pair, const std::string& interpreter = {});

enum class AlignTag { Same, Removed, Added };

struct AlignedRow {
  AlignTag tag = AlignTag::Same;
  Instruction instruction;
};

using OpcodeCounts = std::map<std::string, int>;

struct BytecodeDiff {
  std::string pair_id;
  std::vector<Instruction> instructions_non_id;
  std::vector<Instruction> instructions_id;
  OpcodeCounts added;  // by diff_key
  OpcodeCounts removed;
  std::vector<AlignedRow> aligned;  // longest common subsequence over diff keys
  std::string interpreter_id;
};

BytecodeDiff diff(const std::vector<Instruction>& non_idiomatic, const std::vector<Instruction>& idiomatic);
BytecodeDiff diff(const CodePair& pair, const Disassembly& d);

struct ProbedObject {
  std::string variant;  // "NonIdiomatic" | "Idiomatic"
  std::string expression;
  std::string role;  // "iterated" | "tested" | "compared"
  std::string type_name;
  std::string type_module;
  std::vector<std::string> overloads;  // role-relevant dunders implemented in Python code
};

struct RuntimeProbe {
  std::vector<ProbedObject> objects;

  /// Objects of non-builtins types with at least one overload.
  std::vector<const ProbedObject*> overloaded() const;
};

/// Expressions of a payload that are iterated, truth-tested or compared,
/// with their role, in source order and without duplicates.
std::vector<std::pair<std::string, std::string>> probe_targets(const std::string& payload);

/// Runs setup and payload once per half in a child, then evaluates each
/// probe target and inspects its type. Throws ChildCrash.
RuntimeProbe runtime_probe(const CodePair& pair, const std::string& interpreter = {});

enum class RootCauseKind {
  R1_AddedPreparation,
  R2_SpecializedReplacement,
  R3_RemovedInstructions,
  R4_OverloadedBuiltins,
  R5_ComplexComputation,
};

std::string_view root_cause_name(RootCauseKind k);
RootCauseKind parse_root_cause(std::string_view s);

struct RootCause {
  RootCauseKind primary = RootCauseKind::R3_RemovedInstructions;
  std::vector<std::string> evidence;
};

/// Constructs in the idiomatic payload beyond the synthesized templates:
/// calls other than len/range and the idiom's own call, attribute access,
/// lambdas and nested comprehensions. Each finding is rendered source.
std::vector<std::string> complexity_findings(const CodePair& pair);

/// First matching rule wins: R4 (probe found an overload), R5, R2
/// (specialized opcode added alongside removals), R1 (anything added),
/// R3 (anything removed). For comprehensions over empty data the append
/// opcodes never execute and do not count as specialized.
/// Throws Unclassifiable when the diff is empty and the probe found nothing.
RootCause classify_root_cause(const BytecodeDiff& d, const CodePair& pair,
                              const std::optional<RuntimeProbe>& probe = std::nullopt);

nlohmann::json to_json(const BytecodeDiff& d, const RootCause& cause);

/// <pair_id>.diff.json next to the pair files.
std::filesystem::path diff_report_path(const std::filesystem::path& dir, const std::string& pair_id);

}  // namespace idiomperf
