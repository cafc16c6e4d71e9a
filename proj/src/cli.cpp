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

#include "idiomperf/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "idiomperf/bench_runner.hpp"
#include "idiomperf/bytecode_analyzer.hpp"
#include "idiomperf/equivalence_checker.hpp"
#include "idiomperf/process.hpp"
#include "idiomperf/pyast.hpp"
#include "idiomperf/refactorer.hpp"
#include "idiomperf/synthesizer.hpp"

namespace fs = std::filesystem;

namespace idiomperf {

namespace {

std::vector<CodePair> load_dir(const fs::path& dir) {
  std::vector<CodePair> out;
  for (const auto& f : list_pair_files(dir)) out.push_back(load_pair(f));
  return out;
}

void emit(std::ostream& out, const std::optional<fs::path>& file, const std::string& text) {
  if (file) {
    write_file(*file, text);
  } else {
    out << text;
  }
}

std::string guess_idiom(const std::string& pair_id) {
  for (auto k : kAllIdioms) {
    std::string slug(idiom_slug(k));
    if (pair_id.rfind(slug + "-", 0) == 0) return std::string(idiom_name(k));
  }
  return "unknown";
}

std::string num(double v) { return fmt::format("{:.3f}", v); }
std::string pct(double v) { return fmt::format("{:.1f}", 100 * v); }

// ---- stages ---------------------------------------------------------------

struct GenArgs {
  std::string idiom;
  std::optional<std::size_t> limit;
  std::uint64_t seed = 0;
  fs::path out;
};

int run_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  IdiomKind idiom = parse_idiom(a.idiom);
  auto points = a.limit ? sample_matrix(idiom, *a.limit, a.seed) : enumerate_matrix(idiom);
  fs::create_directories(a.out);
  for (const auto& fv : points) {
    auto pair = synthesize(fv);
    save_pair(a.out, pair);
    out << pair.pair_id << "\n";
  }
  err << "gen: wrote " << points.size() << " pairs to " << a.out.string() << "\n";
  return kExitOk;
}

int run_refactor(const fs::path& dir, std::ostream& out, std::ostream& err) {
  int failed = 0;
  for (const auto& file : list_pair_files(dir)) {
    auto pair = load_pair(file);
    if (!pair.idiomatic_source.empty()) {
      out << pair.pair_id << "\tkept\n";
      continue;
    }
    try {
      refactor_pair(pair);
    } catch (const NotApplicable& e) {
      err << "refactor: " << pair.pair_id << ": " << e.what() << "\n";
      out << pair.pair_id << "\tnot-applicable\n";
      ++failed;
      continue;
    }
    save_pair(dir, pair);
    out << pair.pair_id << "\trefactored\n";
  }
  return failed ? kExitStageFailure : kExitOk;
}

int run_check(const fs::path& dir, const CheckOptions& opts, std::ostream& out, std::ostream& err) {
  std::map<EquivalenceStatus, int> tally;
  for (const auto& pair : load_dir(dir)) {
    auto r = check(pair, opts);
    save_report(dir, r);
    ++tally[r.status];
    out << r.pair_id << "\t" << status_name(r.status) << "\n";
    if (r.status != EquivalenceStatus::Equivalent && r.witness) {
      err << "check: " << r.pair_id << ": " << *r.witness << "\n";
    }
  }
  err << "check: " << tally[EquivalenceStatus::Equivalent] << " equivalent, " << tally[EquivalenceStatus::Divergent]
      << " divergent, " << tally[EquivalenceStatus::Error] << " error\n";
  return tally[EquivalenceStatus::Divergent] + tally[EquivalenceStatus::Error] ? kExitStageFailure : kExitOk;
}

int run_bench(const fs::path& dir, const BenchConfig& cfg, const fs::path& timings, std::ostream& out,
              std::ostream& err) {
  cfg.validate();
  TimingStore store(timings);
  int failed = 0;
  for (const auto& pair : load_dir(dir)) {
    try {
      measure(pair, cfg, &store, [&](const std::string& m) { err << "bench: " << m << "\n"; });
      out << pair.pair_id << "\tmeasured\n";
    } catch (const BenchError& e) {
      err << "bench: " << pair.pair_id << ": " << e.what() << "\n";
      out << pair.pair_id << "\tfailed\n";
      ++failed;
    }
  }
  return failed ? kExitStageFailure : kExitOk;
}

struct StatsArgs {
  fs::path timings;
  std::optional<fs::path> pairs;
  int bootstrap = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
};

int run_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::exists(a.timings)) throw std::runtime_error("no timing store at " + a.timings.string());
  std::map<std::string, CodePair> known;
  if (a.pairs) {
    for (auto& p : load_dir(*a.pairs)) known.emplace(p.pair_id, std::move(p));
  }
  auto matrices = assemble(TimingStore(a.timings).load());
  std::vector<ResultRow> rows;
  for (const auto& [id, m] : matrices) {
    ResultRow row;
    row.pair_id = id;
    if (auto it = known.find(id); it != known.end()) {
      row.idiom = std::string(idiom_name(it->second.idiom));
      if (it->second.features) {
        for (const auto& [k, v] : it->second.features->values) row.features[k] = to_string(v);
      }
    } else {
      row.idiom = guess_idiom(id);
    }
    row.change = perf_change(m.non_idiomatic, m.idiomatic, a.bootstrap, a.confidence, a.seed);
    rows.push_back(std::move(row));
  }
  emit(out, a.out, results_csv(rows));
  err << "stats: " << rows.size() << " pairs\n";
  return kExitOk;
}

int run_analyze(const fs::path& results, int permutations, std::uint64_t seed, std::ostream& out) {
  auto rows = parse_results_csv(read_file(results));
  out << summary_table(rows) << "\n" << correlation_section(rows, permutations, seed);
  return kExitOk;
}

int run_diff(const fs::path& dir, bool probe, const std::string& interpreter, std::ostream& out,
             std::ostream& err) {
  int failed = 0;
  for (const auto& pair : load_dir(dir)) {
    try {
      auto d = diff(pair, disassemble(pair, interpreter));
      std::optional<RuntimeProbe> rp;
      if (probe) rp = runtime_probe(pair, interpreter);
      nlohmann::json report;
      std::string line;
      try {
        auto rc = classify_root_cause(d, pair, rp);
        report = to_json(d, rc);
        std::string ev;
        for (const auto& e : rc.evidence) ev += (ev.empty() ? "" : "; ") + e;
        line = std::string(root_cause_name(rc.primary)) + "\t" + ev;
      } catch (const Unclassifiable&) {
        report = to_json(d, RootCause{});
        report["root_cause"] = "Unclassifiable";
        report["evidence"] = nlohmann::json::array();
        line = "Unclassifiable\t";
      }
      write_file(diff_report_path(dir, pair.pair_id), report.dump(2) + "\n");
      out << pair.pair_id << "\t" << line << "\n";
    } catch (const std::exception& e) {
      err << "diff: " << pair.pair_id << ": " << e.what() << "\n";
      ++failed;
    }
  }
  return failed ? kExitStageFailure : kExitOk;
}

int run_ingest(const fs::path& file, const fs::path& dir, std::ostream& out) {
  std::string text = read_file(file);
  std::vector<nlohmann::json> items;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (auto& j : nlohmann::json::parse(text)) items.push_back(j);
  } else {
    // one object, or JSON Lines
    try {
      items.push_back(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error&) {
      std::istringstream lines(text);
      for (std::string l; std::getline(lines, l);) {
        if (l.find_first_not_of(" \t\r") != std::string::npos) items.push_back(nlohmann::json::parse(l));
      }
    }
  }
  fs::create_directories(dir);
  for (auto& j : items) {
    j.erase("features");
    auto pair = pair_from_json(j);
    if (pair.pair_id.find_first_of("./\\") != std::string::npos) {
      throw std::invalid_argument("pair_id may not contain '.', '/' or '\\': " + pair.pair_id);
    }
    if (pair.idiomatic_source.empty()) throw std::invalid_argument(pair.pair_id + ": idiomatic_source is required");
    for (const auto* src : {&pair.setup_source, &pair.non_idiomatic_source, &pair.idiomatic_source}) {
      try {
        py::parse(*src);
      } catch (const py::ParseError& e) {
        throw std::invalid_argument(pair.pair_id + ": " + e.what());
      }
    }
    save_pair(dir, pair);
    out << pair.pair_id << "\n";
  }
  return kExitOk;
}

int run_report(const fs::path& dir, const std::optional<fs::path>& results, bool all,
               const std::optional<fs::path>& out_file, std::ostream& out) {
  auto pairs = load_dir(dir);
  std::ostringstream md;
  md << "# idiomperf report\n\n## Pairs\n\n| idiom | synthesized | external |\n|---|---|---|\n";
  std::map<std::string, std::pair<int, int>> by_idiom;
  for (const auto& p : pairs) {
    auto& c = by_idiom[std::string(idiom_name(p.idiom))];
    (p.external() ? c.second : c.first)++;
  }
  for (const auto& [name, c] : by_idiom) md << "| " << name << " | " << c.first << " | " << c.second << " |\n";

  std::map<std::string, int> checks, causes;
  std::map<std::string, std::string> check_of, cause_of;
  for (const auto& p : pairs) {
    auto r = load_report(dir, p.pair_id);
    std::string s = r ? std::string(status_name(r->status)) : "unchecked";
    ++checks[s];
    check_of[p.pair_id] = s;
    auto dpath = diff_report_path(dir, p.pair_id);
    std::string c = fs::exists(dpath) ? nlohmann::json::parse(read_file(dpath)).at("root_cause").get<std::string>()
                                      : "not analyzed";
    ++causes[c];
    cause_of[p.pair_id] = c;
  }
  md << "\n## Equivalence\n\n| status | pairs |\n|---|---|\n";
  for (const auto& [s, n] : checks) md << "| " << s << " | " << n << " |\n";
  md << "\n## Root causes\n\n| root cause | pairs |\n|---|---|\n";
  for (const auto& [c, n] : causes) md << "| " << c << " | " << n << " |\n";

  std::map<std::string, const ResultRow*> result_of;
  std::vector<ResultRow> rows;
  if (results) {
    rows = parse_results_csv(read_file(*results));
    md << "\n## Performance change\n\n" << summary_table(rows) << "\n" << correlation_section(rows, 1000, 0);
    for (const auto& r : rows) result_of[r.pair_id] = &r;
  }
  if (all) {
    md << "\n## Pairs in detail\n\n| pair | idiom | check | rho | CI | classification | root cause |\n"
       << "|---|---|---|---|---|---|---|\n";
    for (const auto& p : pairs) {
      md << "| " << p.pair_id << " | " << idiom_name(p.idiom) << " | " << check_of[p.pair_id] << " | ";
      if (auto it = result_of.find(p.pair_id); it != result_of.end()) {
        const auto& c = it->second->change;
        md << num(c.rho) << " | [" << num(c.ci_low) << ", " << num(c.ci_high) << "] | "
           << classification_name(c.classification);
      } else {
        md << " |  | ";
      }
      md << " | " << cause_of[p.pair_id] << " |\n";
    }
  }
  emit(out, out_file, md.str());
  return kExitOk;
}

}  // namespace

std::string summary_table(const std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<PerfChange>> groups;
  for (const auto& r : rows) groups[r.idiom].push_back(r.change);
  std::ostringstream md;
  md << "| idiom | pairs | min | whisker low | p25 | median | p75 | whisker high | max | outliers "
        "| speedup % | slowdown % | unchanged % |\n"
     << "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& [idiom, changes] : groups) {
    auto s = distribution_summary(changes);
    md << "| " << idiom << " | " << s.count << " | " << num(s.min) << " | " << num(s.whisker_low) << " | "
       << num(s.p25) << " | " << num(s.median) << " | " << num(s.p75) << " | " << num(s.whisker_high) << " | "
       << num(s.max) << " | " << s.outliers.size() << " | " << pct(s.speedup) << " | " << pct(s.slowdown) << " | "
       << pct(s.unchanged) << " |\n";
  }
  return md.str();
}

std::string correlation_section(const std::vector<ResultRow>& rows, int permutations, std::uint64_t seed) {
  std::map<std::string, std::vector<std::pair<FeatureVector, double>>> groups;
  for (const auto& r : rows) {
    if (auto fv = row_features(r)) groups[r.idiom].emplace_back(std::move(*fv), r.change.rho);
  }
  std::ostringstream md;
  md << "## Feature correlation (Spearman against ln rho)\n";
  if (groups.empty()) md << "\nNo rows with synthesized features.\n";
  for (const auto& [idiom, data] : groups) {
    md << "\n### " << idiom << "\n\n";
    CorrelationReport rep;
    try {
      rep = feature_correlation(data, permutations, seed);
    } catch (const std::invalid_argument& e) {
      md << "Skipped: " << e.what() << "\n";
      continue;
    }
    md << "| feature | spearman | permutation p | direction |\n|---|---|---|---|\n";
    for (const auto& f : rep.features) {
      md << "| " << f.feature << " | " << num(f.spearman_rho) << " | " << fmt::format("{:.4f}", f.permutation_p)
         << " | " << (f.direction > 0 ? "+" : f.direction < 0 ? "-" : "0") << " |\n";
    }
    for (const auto& c : rep.collinear) {
      md << "\nCollinear: " << c.first << " / " << c.second << " (VIF " << num(c.vif) << "), dropped " << c.dropped
         << "\n";
    }
    for (const auto& n : rep.notes) md << "\nNote: " << n << "\n";
  }
  return md.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize, refactor, check, time and explain Python idiom pairs"};
  app.name("idiomperf");
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Synthesize non-idiomatic pairs from the feature matrix");
  gen_cmd->add_option("--idiom", gen.idiom, "Idiom name or slug")
      ->required()
      ->check(CLI::Validator(
          [](std::string& v) {
            try {
              parse_idiom(v);
            } catch (const std::invalid_argument& e) {
              return std::string(e.what());
            }
            return std::string();
          },
          "IDIOM"));
  gen_cmd->add_option("--limit", gen.limit, "Stratified sample of this many matrix points");
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  fs::path in_dir;
  auto* ref_cmd = app.add_subcommand("refactor", "Fill in the idiomatic half of each pair");
  ref_cmd->add_option("--in", in_dir, "Pair directory")->required()->check(CLI::ExistingDirectory);

  CheckOptions check_opts;
  auto* check_cmd = app.add_subcommand("check", "Differential equivalence check of each pair");
  check_cmd->add_option("--in", in_dir, "Pair directory")->required()->check(CLI::ExistingDirectory);
  check_cmd->add_option("--trials", check_opts.trials, "Trials per pair")->check(CLI::PositiveNumber);
  check_cmd->add_option("--seed", check_opts.seed, "Trial seed");
  check_cmd->add_option("--interpreter", check_opts.interpreter, "Target interpreter");

  BenchConfig bench_cfg;
  fs::path timings;
  bool desk = false;
  std::optional<std::int64_t> reps;
  auto* bench_cmd = app.add_subcommand("bench", "Time both halves of each pair in fresh interpreters");
  bench_cmd->add_option("--in", in_dir, "Pair directory")->required()->check(CLI::ExistingDirectory);
  auto* n_opt = bench_cmd->add_option("--n", bench_cfg.n_invocations, "Interpreter invocations");
  auto* k_opt = bench_cmd->add_option("--k", bench_cfg.k_iterations, "Iterations per invocation");
  auto* w_opt = bench_cmd->add_option("--warmup", bench_cfg.warmup, "Leading iterations dropped by stats");
  bench_cmd->add_flag("--desk", desk, "Desk-scale protocol (n=5, k=10, warmup=3) unless overridden");
  bench_cmd->add_option("--interpreter", bench_cfg.interpreter, "Target interpreter");
  bench_cmd->add_option("--seed", bench_cfg.seed, "Data shuffle seed");
  bench_cmd->add_option("--reps", reps, "Repetitions per iteration (skips calibration)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--timings", timings, "JSON Lines timing store")->required();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Performance change and bootstrap CI per pair");
  stats_cmd->add_option("--timings", stats.timings, "JSON Lines timing store")->required();
  stats_cmd->add_option("--in", stats.pairs, "Pair directory (idiom and features)");
  stats_cmd->add_option("--bootstrap", stats.bootstrap, "Bootstrap replicates")->check(CLI::PositiveNumber);
  stats_cmd->add_option("--confidence", stats.confidence, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  stats_cmd->add_option("--seed", stats.seed, "Bootstrap seed");
  stats_cmd->add_option("--out", stats.out, "Results CSV (stdout when omitted)");

  fs::path results;
  int permutations = 1000;
  std::uint64_t seed = 0;
  auto* analyze_cmd = app.add_subcommand("analyze", "Distribution summaries and feature correlation");
  analyze_cmd->add_option("--results", results, "Results CSV")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--permutations", permutations, "Permutations per p-value")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--seed", seed, "Permutation seed");

  bool probe = false;
  std::string interpreter;
  auto* diff_cmd = app.add_subcommand("diff", "Bytecode diff and root cause per pair");
  diff_cmd->add_option("--in", in_dir, "Pair directory")->required()->check(CLI::ExistingDirectory);
  diff_cmd->add_flag("--probe", probe, "Run the runtime probe for overloaded built-in methods");
  diff_cmd->add_option("--interpreter", interpreter, "Target interpreter");

  bool all = false;
  std::optional<fs::path> report_results, report_out;
  auto* report_cmd = app.add_subcommand("report", "Markdown bundle of every stage's output");
  report_cmd->add_option("--in", in_dir, "Pair directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--results", report_results, "Results CSV")->check(CLI::ExistingFile);
  report_cmd->add_flag("--all", all, "Include the per-pair table");
  report_cmd->add_option("--out", report_out, "Output file (stdout when omitted)");

  fs::path ingest_file, ingest_out;
  auto* ingest_cmd = app.add_subcommand("ingest", "Import externally written pairs");
  ingest_cmd->add_option("--file", ingest_file, "JSON object, array or JSON Lines")->required()->check(
      CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest_out, "Pair directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "idiomperf: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << "run '" << (sub == &app ? "idiomperf --help" : "idiomperf " + sub->get_name() + " --help")
          << "' for usage\n";
    }
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen, out, err);
    if (*ref_cmd) return run_refactor(in_dir, out, err);
    if (*check_cmd) return run_check(in_dir, check_opts, out, err);
    if (*bench_cmd) {
      if (desk) {
        auto d = desk_config();
        if (!*n_opt) bench_cfg.n_invocations = d.n_invocations;
        if (!*k_opt) bench_cfg.k_iterations = d.k_iterations;
        if (!*w_opt) bench_cfg.warmup = d.warmup;
      }
      bench_cfg.reps = reps;
      try {
        bench_cfg.validate();
      } catch (const std::invalid_argument& e) {
        err << "idiomperf: " << e.what() << "\n";
        return kExitUsage;
      }
      return run_bench(in_dir, bench_cfg, timings, out, err);
    }
    if (*stats_cmd) return run_stats(stats, out, err);
    if (*analyze_cmd) return run_analyze(results, permutations, seed, out);
    if (*diff_cmd) return run_diff(in_dir, probe, interpreter, out, err);
    if (*report_cmd) return run_report(in_dir, report_results, all, report_out, out);
    if (*ingest_cmd) return run_ingest(ingest_file, ingest_out, out);
  } catch (const std::exception& e) {
    err << "idiomperf: " << e.what() << "\n";
    return kExitStageFailure;
  }
  return kExitUsage;
}

}  // namespace idiomperf
