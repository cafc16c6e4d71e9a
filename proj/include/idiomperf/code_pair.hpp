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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "idiomperf/idiom_catalog.hpp"

namespace idiomperf {

/// A non-idiomatic / idiomatic pair plus the setup both halves share.
/// Synthesized pairs carry their FeatureVector; ingested ones carry notes.
struct CodePair {
  std::string pair_id;
  IdiomKind idiom = IdiomKind::ListComprehension;
  std::optional<FeatureVector> features;
  std::string notes;  // external pairs only
  std::string setup_source;
  std::string non_idiomatic_source;
  std::string idiomatic_source;
  Scope scope_mode = Scope::Local;
  /// Value bound to `_size` when the setup runs (element count of the data).
  std::int64_t size = 0;

  bool external() const { return !features.has_value(); }
};

std::string fnv1a64_hex(std::string_view data);

nlohmann::json to_json(const FeatureVector& fv);
FeatureVector features_from_json(IdiomKind idiom, const nlohmann::json& j);

nlohmann::json to_json(const CodePair& pair);
CodePair pair_from_json(const nlohmann::json& j);

/// One JSON file per pair, named <pair_id>.json.
std::filesystem::path save_pair(const std::filesystem::path& dir, const CodePair& pair);
CodePair load_pair(const std::filesystem::path& file);
/// Pair files in a directory (reports and other sidecar files excluded), sorted.
std::vector<std::filesystem::path> list_pair_files(const std::filesystem::path& dir);

}  // namespace idiomperf
