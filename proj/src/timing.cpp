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

#include "idiomperf/timing.hpp"

#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>

namespace idiomperf {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string_view variant_name(Variant v) {
  return v == Variant::NonIdiomatic ? "NonIdiomatic" : "Idiomatic";
}

Variant parse_variant(std::string_view s) {
  if (s == "NonIdiomatic") return Variant::NonIdiomatic;
  if (s == "Idiomatic") return Variant::Idiomatic;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

void TimingMatrix::validate() const {
  if (timings_ns.empty() || timings_ns.front().empty()) throw std::invalid_argument(pair_id + ": empty timing grid");
  for (const auto& row : timings_ns) {
    if (row.size() != k()) throw std::invalid_argument(pair_id + ": ragged timing grid");
    for (double v : row) {
      if (!(v > 0)) throw std::invalid_argument(pair_id + ": non-positive duration");
    }
  }
  if (warmup < 0 || static_cast<std::size_t>(warmup) >= k()) {
    throw std::invalid_argument(pair_id + ": warmup must be in [0, k)");
  }
}

json to_json(const TimingRecord& r) {
  return json{{"pair_id", r.pair_id},
              {"variant", variant_name(r.variant)},
              {"invocation", r.invocation},
              {"timings_ns", r.timings_ns},
              {"interpreter_id", r.interpreter_id},
              {"host_id", r.host_id},
              {"warmup", r.warmup},
              {"reps", r.reps}};
}

TimingRecord record_from_json(const json& j) {
  TimingRecord r;
  r.pair_id = j.at("pair_id").get<std::string>();
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.invocation = j.at("invocation").get<int>();
  r.timings_ns = j.at("timings_ns").get<std::vector<double>>();
  r.interpreter_id = j.value("interpreter_id", "");
  r.host_id = j.value("host_id", "");
  r.warmup = j.value("warmup", 0);
  r.reps = j.value("reps", std::int64_t{1});
  return r;
}

TimingStore::TimingStore(std::filesystem::path path) : path_(std::move(path)) {
  // Drop a partial last line left by an interrupted write so appends start
  // on a fresh line.
  if (std::filesystem::exists(path_)) {
    std::string text = read_text(path_);
    if (!text.empty() && text.back() != '\n') {
      auto cut = text.rfind('\n');
      std::filesystem::resize_file(path_, cut == std::string::npos ? 0 : cut + 1);
    }
  }
  for (const auto& r : load()) keys_.emplace(r.pair_id, static_cast<int>(r.variant), r.invocation);
}

std::vector<TimingRecord> TimingStore::load() const {
  std::vector<TimingRecord> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(record_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) break;
      throw std::runtime_error(path_.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

bool TimingStore::has(const std::string& pair_id, Variant v, int invocation) const {
  return keys_.count({pair_id, static_cast<int>(v), invocation}) > 0;
}

void TimingStore::append(const TimingRecord& r) {
  if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path_.string());
  out << to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path_.string());
  keys_.emplace(r.pair_id, static_cast<int>(r.variant), r.invocation);
}

std::map<std::string, MatrixPair> assemble(const std::vector<TimingRecord>& records) {
  // pair -> variant -> invocation -> record
  std::map<std::string, std::map<int, std::map<int, const TimingRecord*>>> grouped;
  for (const auto& r : records) grouped[r.pair_id][static_cast<int>(r.variant)].emplace(r.invocation, &r);

  std::map<std::string, MatrixPair> out;
  for (const auto& [pair_id, by_variant] : grouped) {
    if (by_variant.size() != 2) continue;
    const auto& a = by_variant.at(static_cast<int>(Variant::NonIdiomatic));
    const auto& b = by_variant.at(static_cast<int>(Variant::Idiomatic));
    if (a.size() != b.size()) continue;
    auto build = [&](const std::map<int, const TimingRecord*>& rows, Variant v) -> std::optional<TimingMatrix> {
      TimingMatrix m;
      m.pair_id = pair_id;
      m.variant = v;
      int expect = 0;
      for (const auto& [inv, rec] : rows) {
        if (inv != expect++) return std::nullopt;
        if (m.timings_ns.empty()) {
          m.warmup = rec->warmup;
          m.interpreter_id = rec->interpreter_id;
          m.host_id = rec->host_id;
        } else if (rec->warmup != m.warmup || rec->timings_ns.size() != m.k()) {
          return std::nullopt;
        }
        m.timings_ns.push_back(rec->timings_ns);
      }
      return m;
    };
    auto ma = build(a, Variant::NonIdiomatic);
    auto mb = build(b, Variant::Idiomatic);
    if (!ma || !mb || ma->k() != mb->k() || ma->warmup != mb->warmup) continue;
    out.emplace(pair_id, MatrixPair{std::move(*ma), std::move(*mb)});
  }
  return out;
}

}  // namespace idiomperf
