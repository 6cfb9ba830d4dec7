// Copyright 2026 The tierprof Authors
// SPDX-License-Identifier: Apache-2.0
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

// tierprof: run the control-plane testbed under the profiler and turn its
// dumps into reports.
//
//   tierprof run --scenario config/fast.conf --out runs/a
//   tierprof analyze runs/a
//   tierprof report runs/a --kind function --sort tottime --top 20
//   tierprof compare runs/a runs/b
//   tierprof calibrate
//
// Exit codes: 0 ok, 2 configuration or usage error, 3 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tierprof/commands.h"

namespace fs = std::filesystem;
using namespace tierprof;

namespace {

std::string_view extension_for(ReportFormat format) {
  switch (format) {
    case ReportFormat::kText: return ".txt";
    case ReportFormat::kCsv: return ".csv";
    case ReportFormat::kStructured: return ".json";
  }
  return ".txt";
}

ReportFormat format_or_throw(const std::string& text) {
  const auto format = parse_report_format(text);
  if (!format) throw Error(ErrorCode::kConfig, "unknown format '" + text + "'");
  return *format;
}

// Artifacts land next to the inputs unless --out says otherwise.
fs::path default_out(const std::vector<fs::path>& inputs, std::string_view stem,
                     ReportFormat format) {
  const fs::path name = std::string(stem) + std::string(extension_for(format));
  if (!inputs.empty() && fs::is_directory(inputs.front())) return inputs.front() / name;
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-level profiler and control-plane testbed"};
  app.require_subcommand(1);

  // run
  RunPlan plan;
  std::string levels = "all";
  std::string mode = "process";
  CLI::App* run = app.add_subcommand("run", "Bootstrap a scenario, run it, collect dumps");
  run->add_option("--scenario", plan.scenario, "Scenario file")->required();
  run->add_option("--levels", levels, "coarse,function,line,thread,sample | all | none")
      ->capture_default_str();
  run->add_option("--out", plan.out, "Run directory")->required();
  run->add_option("--seed", plan.seed, "Seed for client traffic")->capture_default_str();
  run->add_option("--mode", mode, "process | thread")->capture_default_str();

  // analyze
  std::vector<fs::path> inputs;
  std::optional<fs::path> rules;
  double threshold = 10.0;
  fs::path out;
  std::string format = "text";
  CLI::App* analyze = app.add_subcommand("analyze", "Rank hotspots by time category");
  analyze->add_option("inputs", inputs, "Run directories, dumps or profiles")->required();
  analyze->add_option("--rules", rules, "Category rules file");
  analyze->add_option("--threshold", threshold, "Minimum share in percent")
      ->capture_default_str();
  analyze->add_option("--out", out, "Findings file (default <run>/findings.<ext>)");
  std::string analyze_format = "structured";
  analyze->add_option("--format", analyze_format, "text | csv | structured")
      ->capture_default_str();

  // report
  ReportSpec spec;
  std::string kind = "function";
  std::string clock = "cpu";
  std::size_t top = 0;
  std::string sort;
  std::string function_scope;
  CLI::App* report = app.add_subcommand("report", "Render one table");
  report->add_option("inputs", inputs, "Run directories, dumps or profiles")->required();
  report->add_option("--kind", kind, "function | line | thread | coarse | hotspot")
      ->capture_default_str();
  report->add_option("--sort", sort, "Sort key (kind specific)");
  report->add_option("--top", top, "Maximum rows (0 = all)");
  report->add_option("--format", format, "text | csv | structured")->capture_default_str();
  report->add_option("--function", function_scope, "Line tables: enclosing function");
  report->add_option("--clock", clock, "Thread tables: cpu | wall")->capture_default_str();
  report->add_option("--threshold", threshold, "Hotspot reports: minimum share")
      ->capture_default_str();
  report->add_option("--rules", rules, "Category rules file");
  report->add_option("--out", out, "Output file (default stdout)");

  // compare
  fs::path before;
  fs::path after;
  double epsilon = 0.05;
  CLI::App* cmp = app.add_subcommand("compare", "Category and site deltas between two runs");
  cmp->add_option("before", before, "Baseline run, dump or profile")->required();
  cmp->add_option("after", after, "Candidate run, dump or profile")->required();
  cmp->add_option("--epsilon", epsilon, "Regression threshold in seconds")->capture_default_str();
  cmp->add_option("--rules", rules, "Category rules file");
  cmp->add_option("--sort", sort, "delta | name");
  cmp->add_option("--top", top, "Maximum site rows (0 = all)");
  cmp->add_option("--format", format, "text | csv | structured")->capture_default_str();
  cmp->add_option("--out", out, "Output file (default stdout)");

  // calibrate
  fs::path calibration_out = "calibration.tsv";
  CLI::App* cal = app.add_subcommand("calibrate", "Measure per-event profiler overhead");
  cal->add_option("--out", calibration_out, "Budget record")->capture_default_str();

  // entity (spawned by `run`, configured through the environment)
  CLI::App* entity = app.add_subcommand("entity", "");
  entity->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      plan.levels = Levels::parse(levels);
      if (mode == "process") {
        plan.mode = LaunchMode::kProcess;
      } else if (mode == "thread") {
        plan.mode = LaunchMode::kThread;
      } else {
        throw Error(ErrorCode::kConfig, "unknown mode '" + mode + "'");
      }
      plan.entity_binary = fs::read_symlink("/proc/self/exe");
      const RunOutcome outcome = cmd_run(plan);
      std::cout << outcome.run_dir.string() << "\n";
      for (const std::string& p : outcome.problems) std::cerr << "tierprof: " << p << "\n";
      return outcome.clean ? kExitOk : kExitRuntime;
    }
    if (*analyze) {
      const ReportFormat f = format_or_throw(analyze_format);
      if (out.empty()) out = default_out(inputs, "findings", f);
      std::cout << cmd_analyze(inputs, rules, threshold, out, f).string() << "\n";
      return kExitOk;
    }
    if (*report) {
      const auto k = parse_report_kind(kind);
      if (!k) throw Error(ErrorCode::kConfig, "unknown report kind '" + kind + "'");
      spec.kind = *k;
      spec.sort_key = sort;
      if (top > 0) spec.top_n = top;
      spec.format = format_or_throw(format);
      spec.function_scope = function_scope;
      if (clock == "cpu") {
        spec.clock = ClockType::kCpu;
      } else if (clock == "wall") {
        spec.clock = ClockType::kWall;
      } else {
        throw Error(ErrorCode::kConfig, "unknown clock '" + clock + "'");
      }
      spec.threshold_pct = threshold;
      if (!out.empty()) spec.output = out;
      cmd_report(inputs, spec, rules);
      if (spec.output) std::cout << spec.output->string() << "\n";
      return kExitOk;
    }
    if (*cmp) {
      spec.sort_key = sort;
      if (top > 0) spec.top_n = top;
      spec.format = format_or_throw(format);
      const fs::path written = cmd_compare({before}, {after}, rules, epsilon, spec, out);
      if (!written.empty()) std::cout << written.string() << "\n";
      return kExitOk;
    }
    if (*cal) {
      std::cout << cmd_calibrate(calibration_out).string() << "\n";
      return kExitOk;
    }
    if (*entity) return cmd_entity();
  } catch (const Error& e) {
    std::cerr << "tierprof: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "tierprof: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
