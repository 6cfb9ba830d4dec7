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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tierprof/category_rules.h"
#include "tierprof/error.h"
#include "tierprof/instrumentation.h"
#include "tierprof/profile_model.h"
#include "tierprof/reporting.h"
#include "tierprof/topology.h"

namespace tierprof {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// 2 for errors in what the user asked for (bad config, flags, sort key,
// unknown scope), 3 for everything that went wrong while doing it.
int exit_code_for(const Error& error);

struct RunPlan {
  std::filesystem::path scenario;
  Levels levels = Levels::all();
  std::filesystem::path out;
  std::uint64_t seed = 1;
  LaunchMode mode = LaunchMode::kProcess;
  // Executable providing the `entity` subcommand (process mode).
  std::filesystem::path entity_binary;
};

struct RunOutcome {
  std::filesystem::path run_dir;
  std::string run_id;
  bool clean = true;  // every entity exited cleanly
  std::vector<std::string> problems;
};

// Bootstraps the scenario, runs it for run_duration and shuts it down. The
// run directory receives one dump per process plus run.txt, timeline.tsv,
// coarse.tsv, scenario.conf and index.tsv; process mode also leaves
// <entity>.log and <entity>.result files.
RunOutcome cmd_run(const RunPlan& plan);

// A run directory, *.dump files and profile .json files, merged into one
// profile. Throws Error(kConfig) when nothing usable is found.
Profile load_inputs(const std::vector<std::filesystem::path>& inputs);

CategoryRules load_rules(const std::optional<std::filesystem::path>& path);

// Writes the hotspot findings (structured format unless `format` says
// otherwise) to `out` and returns it.
std::filesystem::path cmd_analyze(const std::vector<std::filesystem::path>& inputs,
                                  const std::optional<std::filesystem::path>& rules,
                                  double threshold_pct, const std::filesystem::path& out,
                                  ReportFormat format = ReportFormat::kStructured);

// Renders one report. Function, line and thread tables come from the merged
// profile, coarse tables from the per-process breakdowns, hotspot reports
// from find_hotspots. Writes to spec.output or stdout.
void cmd_report(const std::vector<std::filesystem::path>& inputs, const ReportSpec& spec,
                const std::optional<std::filesystem::path>& rules);

std::filesystem::path cmd_compare(const std::vector<std::filesystem::path>& before,
                                  const std::vector<std::filesystem::path>& after,
                                  const std::optional<std::filesystem::path>& rules,
                                  double epsilon_s, const ReportSpec& spec,
                                  const std::filesystem::path& out);

struct OverheadBudget {
  Calibration calibration;
  // Wall-time inflation of a function of the given length with one enter
  // and one exit event around it.
  double inflation_pct_at_10us = 0;
  double inflation_pct_at_1ms = 0;
};

OverheadBudget overhead_budget(const Calibration& calibration);
std::string budget_to_text(const OverheadBudget& budget);
std::filesystem::path cmd_calibrate(const std::filesystem::path& out);

// Entry point of a spawned entity process; configured through the
// environment the topology sets. Returns the process exit code.
int cmd_entity();

}  // namespace tierprof
