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

#include "idiomperf/code_pair.hpp"

#include <algorithm>
#include <cstdio>

#include "idiomperf/process.hpp"

namespace idiomperf {

using nlohmann::json;

std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const FeatureVector& fv) {
  json j = json::object();
  for (const auto& [k, v] : fv.values) {
    std::visit([&](const auto& x) { j[k] = x; }, v);
  }
  return j;
}

FeatureVector features_from_json(IdiomKind idiom, const json& j) {
  std::map<std::string, FeatureValue, std::less<>> values;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    if (v.is_boolean()) {
      values[it.key()] = v.get<bool>();
    } else if (v.is_number_integer()) {
      values[it.key()] = v.get<std::int64_t>();
    } else if (v.is_string()) {
      values[it.key()] = v.get<std::string>();
    } else {
      throw IllegalFeature("feature '" + it.key() + "' has an unsupported JSON type");
    }
  }
  FeatureVector fv{idiom, std::move(values)};
  validate(fv);
  return fv;
}

json to_json(const CodePair& p) {
  json j;
  j["pair_id"] = p.pair_id;
  j["idiom"] = std::string(idiom_name(p.idiom));
  j["features"] = p.features ? to_json(*p.features) : json(nullptr);
  if (p.external()) j["notes"] = p.notes;
  j["setup_source"] = p.setup_source;
  j["non_idiomatic_source"] = p.non_idiomatic_source;
  j["idiomatic_source"] = p.idiomatic_source;
  j["scope_mode"] = std::string(scope_name(p.scope_mode));
  j["size"] = p.size;
  return j;
}

CodePair pair_from_json(const json& j) {
  CodePair p;
  p.pair_id = j.at("pair_id").get<std::string>();
  p.idiom = parse_idiom(j.at("idiom").get<std::string>());
  if (j.contains("features") && !j["features"].is_null()) p.features = features_from_json(p.idiom, j["features"]);
  p.notes = j.value("notes", std::string());
  p.setup_source = j.value("setup_source", std::string());
  p.non_idiomatic_source = j.at("non_idiomatic_source").get<std::string>();
  p.idiomatic_source = j.value("idiomatic_source", std::string());
  p.scope_mode = parse_scope(j.value("scope_mode", std::string("Local")));
  p.size = j.value("size", std::int64_t{0});
  if (p.pair_id.empty()) throw std::invalid_argument("pair_id must not be empty");
  return p;
}

std::filesystem::path save_pair(const std::filesystem::path& dir, const CodePair& pair) {
  auto path = dir / (pair.pair_id + ".json");
  write_file(path, to_json(pair).dump(2) + "\n");
  return path;
}

CodePair load_pair(const std::filesystem::path& file) {
  try {
    return pair_from_json(json::parse(read_file(file)));
  } catch (const json::exception& e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_pair_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    // sidecars look like <id>.check.json / <id>.diff.json
    if (std::count(name.begin(), name.end(), '.') != 1) continue;
    out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace idiomperf
