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

#include "idiomperf/bench_runner.hpp"

#include <algorithm>

#include <json.hpp>

#include "idiomperf/process.hpp"
#include "idiomperf/synthesizer.hpp"

namespace idiomperf {

using nlohmann::json;

void BenchConfig::validate() const {
  if (n_invocations < 1) throw std::invalid_argument("n must be >= 1");
  if (k_iterations < 1) throw std::invalid_argument("k must be >= 1");
  if (warmup < 0 || warmup >= k_iterations) throw std::invalid_argument("warmup must be in [0, k)");
  if (!(target_iteration_ns > 0)) throw std::invalid_argument("target iteration time must be positive");
  if (reps && *reps < 1) throw std::invalid_argument("reps must be >= 1");
}

BenchConfig desk_config() {
  BenchConfig cfg;
  cfg.n_invocations = 5;
  cfg.k_iterations = 10;
  cfg.warmup = 3;
  // Few invocations: longer iterations keep host noise bursts from dominating.
  cfg.target_iteration_ns = 1e7;
  return cfg;
}

namespace {

const std::string& source_of(const CodePair& pair, Variant v) {
  return v == Variant::NonIdiomatic ? pair.non_idiomatic_source : pair.idiomatic_source;
}

struct Child {
  const CodePair& pair;
  const BenchConfig& cfg;
  std::string interpreter;

  // One fresh interpreter running the generated runner; returns its single
  // JSON line.
  json run(Variant v, const RunnerOptions& opts, const std::string& what) const {
    std::string runner = wrap_scope(source_of(pair, v), pair.setup_source, pair.scope_mode, opts);
    TempDir scratch("idiomperf-bench");
    auto file = scratch.write("runner.py", runner);
    ProcessOptions popts;
    popts.timeout = cfg.timeout;
    if (cfg.scrub_environment) popts.env = scrubbed_environment();
    popts.cwd = cfg.working_directory.empty() ? scratch.path() : cfg.working_directory;
    auto res = run_process({interpreter, "-I", "-S", file.string()}, popts);
    std::string who = pair.pair_id + " " + std::string(variant_name(v)) + " " + what;
    if (res.timed_out) throw Timeout(who + ": timed out");
    if (!res.ok()) {
      throw ChildCrash(who + ": exit " + std::to_string(res.exit_code) + " signal " + std::to_string(res.signal) +
                       "\n" + res.err);
    }
    auto nl = res.out.find_last_not_of("\r\n");
    std::string line = nl == std::string::npos ? "" : res.out.substr(0, nl + 1);
    if (auto pos = line.rfind('\n'); pos != std::string::npos) line = line.substr(pos + 1);
    try {
      return json::parse(line);
    } catch (const json::exception&) {
      throw ChildCrash(who + ": unreadable output: " + res.out.substr(0, 200));
    }
  }
};

}  // namespace

std::int64_t calibrate(const CodePair& pair, const BenchConfig& cfg) {
  cfg.validate();
  if (cfg.reps) return *cfg.reps;
  Child child{pair, cfg, resolve_interpreter(cfg.interpreter)};
  std::int64_t reps = 1;
  for (Variant v : {Variant::NonIdiomatic, Variant::Idiomatic}) {
    RunnerOptions opts;
    opts.calibrate_ns = cfg.target_iteration_ns;
    opts.size = pair.size;
    opts.shuffle_seed = cfg.seed;
    reps = std::max(reps, child.run(v, opts, "calibration").at("reps").get<std::int64_t>());
  }
  return reps;
}

MatrixPair measure(const CodePair& pair, const BenchConfig& cfg, TimingStore* store, const BenchLog& log) {
  cfg.validate();
  if (pair.idiomatic_source.empty()) throw BenchError(pair.pair_id + ": idiomatic source is empty");
  std::string interpreter = resolve_interpreter(cfg.interpreter);
  Child child{pair, cfg, interpreter};
  std::string interp_id = interpreter_version(interpreter);
  std::string host = host_id();

  // Previously stored invocations of this pair, keyed by (variant, invocation).
  std::map<std::pair<int, int>, TimingRecord> done;
  if (store != nullptr) {
    for (auto& r : store->load()) {
      if (r.pair_id == pair.pair_id) done.emplace(std::make_pair(static_cast<int>(r.variant), r.invocation), r);
    }
  }

  std::optional<std::int64_t> reps;
  for (const auto& [key, r] : done) {
    if (static_cast<int>(r.timings_ns.size()) != cfg.k_iterations || r.warmup != cfg.warmup) {
      throw BenchError(pair.pair_id + ": stored timings were taken with a different k or warmup");
    }
    reps = r.reps;  // resume with the amplification already in use
  }

  MatrixPair out;
  for (Variant v : {Variant::NonIdiomatic, Variant::Idiomatic}) {
    TimingMatrix& m = v == Variant::NonIdiomatic ? out.non_idiomatic : out.idiomatic;
    m.pair_id = pair.pair_id;
    m.variant = v;
    m.warmup = cfg.warmup;
    m.interpreter_id = interp_id;
    m.host_id = host;
    m.timings_ns.resize(static_cast<std::size_t>(cfg.n_invocations));
  }

  for (int i = 0; i < cfg.n_invocations; ++i) {
    for (Variant v : {Variant::NonIdiomatic, Variant::Idiomatic}) {
      TimingMatrix& m = v == Variant::NonIdiomatic ? out.non_idiomatic : out.idiomatic;
      auto row = static_cast<std::size_t>(i);
      if (auto it = done.find({static_cast<int>(v), i}); it != done.end()) {
        m.timings_ns[row] = it->second.timings_ns;
        continue;
      }
      if (!reps) {
        reps = calibrate(pair, cfg);
        if (log) log(pair.pair_id + ": " + std::to_string(*reps) + " repetitions per iteration");
      }
      RunnerOptions opts;
      opts.iterations = cfg.k_iterations;
      opts.reps = *reps;
      opts.size = pair.size;
      opts.shuffle_seed = cfg.seed + static_cast<std::uint64_t>(i);
      auto timings = child.run(v, opts, "invocation " + std::to_string(i)).at("timings_ns").get<std::vector<double>>();
      if (static_cast<int>(timings.size()) != cfg.k_iterations) {
        throw ChildCrash(pair.pair_id + ": expected " + std::to_string(cfg.k_iterations) + " timings, got " +
                         std::to_string(timings.size()));
      }
      if (std::any_of(timings.begin(), timings.end(), [](double t) { return !(t > 0); })) {
        throw ClockResolution(pair.pair_id + " " + std::string(variant_name(v)) +
                              ": a duration read zero; increase the repetition count");
      }
      if (store != nullptr) {
        store->append(TimingRecord{pair.pair_id, v, i, timings, interp_id, host, cfg.warmup, *reps});
      }
      m.timings_ns[row] = std::move(timings);
    }
    if (log) log(pair.pair_id + ": invocation " + std::to_string(i + 1) + "/" + std::to_string(cfg.n_invocations));
  }
  out.non_idiomatic.validate();
  out.idiomatic.validate();
  return out;
}

}  // namespace idiomperf
