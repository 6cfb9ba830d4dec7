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

#include "tierprof/commands.h"

#include <unistd.h>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "text_util.h"
#include "tierprof/analysis.h"
#include "tierprof/clock.h"
#include "tierprof/dump.h"
#include "tierprof/process_times.h"
#include "tierprof/sampler.h"
#include "tierprof/scenario.h"

namespace tierprof {

namespace {

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

// Write-then-rename, so a reader never sees half a file.
void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_text(tmp, text);
  std::filesystem::rename(tmp, path);
}

std::string env_or(const char* key, std::string fallback = {}) {
  const char* value = std::getenv(key);
  return value ? std::string(value) : std::move(fallback);
}

std::int64_t env_i64(const char* key, std::int64_t fallback) {
  const char* value = std::getenv(key);
  if (!value) return fallback;
  try {
    return detail::parse_number<std::int64_t>(value, key);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
}

std::string make_run_id(const ScenarioConfig& config, std::uint64_t seed) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  return fmt::format("{}-s{}-{}", config.scenario_id, seed, ms);
}

struct SamplingGuard {
  std::optional<Sampler> sampler;

  SamplingGuard(Levels levels, double interval_ms) {
    if (!levels.has(Level::kSample)) return;
    sampler.emplace(Recorder::global(),
                    std::chrono::nanoseconds(static_cast<std::int64_t>(interval_ms * 1e6)));
    sampler->start();
  }
  // Empty when sampling is off.
  SampleStream finish() { return sampler ? sampler->stop() : SampleStream{}; }
};

Dump collect_dump(const std::string& run_id, const ScenarioConfig& config,
                  const std::string& process, Levels levels, const Calibration& calibration,
                  std::int64_t start_ns, SampleStream samples) {
  DumpHeader header;
  header.run_id = run_id;
  header.scenario_id = config.scenario_id;
  header.process = process;
  header.pid = ::getpid();
  header.scale_factor = config.scale_factor();
  header.calibration = calibration;
  header.levels = levels.to_string();
  header.coarse = read_self_times(start_ns);
  header.samples_partial = samples.partial;
  Dump dump = Recorder::global().collect(std::move(header));
  dump.samples = std::move(samples.samples);
  return dump;
}

std::string coarse_tsv_row(std::string_view name, std::int64_t pid, const CoarseBreakdown& c) {
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", name, pid, detail::format_double(c.elapsed_s),
                     detail::format_double(c.user_s), detail::format_double(c.system_s),
                     detail::format_double(c.other_s), c.oversubscribed ? 1 : 0);
}

}  // namespace

int exit_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidSortKey:
    case ErrorCode::kUnknownScope:
    case ErrorCode::kScenarioMismatch:
      return kExitConfig;
    default: return kExitRuntime;
  }
}

RunOutcome cmd_run(const RunPlan& plan) {
  const std::int64_t start_ns = wall_now_ns();
  if (plan.scenario.empty()) throw Error(ErrorCode::kConfig, "run needs a scenario");
  if (plan.out.empty()) throw Error(ErrorCode::kConfig, "run needs an output directory");
  const ScenarioConfig config = load_scenario(plan.scenario);

  RunOutcome outcome;
  outcome.run_dir = plan.out;
  outcome.run_id = make_run_id(config, plan.seed);
  std::filesystem::create_directories(plan.out);
  for (const auto& entry : std::filesystem::directory_iterator(plan.out)) {
    const auto ext = entry.path().extension();
    if (ext == ".dump" || ext == ".result") std::filesystem::remove(entry.path());
  }
  const std::filesystem::path scenario_copy = plan.out / "scenario.conf";
  write_text(scenario_copy, scenario_to_text(config));

  Recorder& recorder = Recorder::global();
  recorder.clear();
  recorder.set_levels(plan.levels);
  recorder.set_thread_name("gm");
  const Calibration calibration = calibrate();

  TopologyOptions options;
  options.mode = plan.mode;
  options.entity_binary = plan.entity_binary;
  options.run_dir = plan.out;
  options.seed = plan.seed;
  options.extra_env = {
      "TIERPROF_RUN_DIR=" + std::filesystem::absolute(plan.out).string(),
      "TIERPROF_RUN_ID=" + outcome.run_id,
      "TIERPROF_SCENARIO_FILE=" + std::filesystem::absolute(scenario_copy).string(),
      "TIERPROF_LEVELS=" + plan.levels.to_string(),
      fmt::format("TIERPROF_EVENT_OVERHEAD_NS={}", calibration.event_overhead_ns),
      fmt::format("TIERPROF_CLOCK_RESOLUTION_NS={}", calibration.clock_resolution_ns),
  };

  SamplingGuard sampling(plan.levels, config.sample_interval_ms);
  Topology topology(config, options);
  try {
    topology.bootstrap();
    topology.monitor(config.run_duration);
  } catch (...) {
    topology.shutdown();
    sampling.finish();
    throw;
  }
  topology.shutdown();
  SampleStream samples = sampling.finish();
  recorder.set_levels(Levels());
  save_dump(collect_dump(outcome.run_id, config, "gm", plan.levels, calibration, start_ns,
                         std::move(samples)),
            plan.out / "gm.dump");

  RunSummary summary;
  summary.run_id = outcome.run_id;
  summary.scenario_id = config.scenario_id;
  summary.scale_factor = config.scale_factor();
  summary.levels = plan.levels.to_string();
  summary.seed = plan.seed;

  std::string timeline = "phase\tseconds\n";
  for (const TimelineEntry& t : topology.timeline()) {
    const double s = static_cast<double>(t.wall_ns) / 1e9;
    timeline += fmt::format("{}\t{}\n", to_string(t.phase), detail::format_double(s));
    summary.timeline.emplace_back(std::string(to_string(t.phase)), s);
  }
  write_text(plan.out / "timeline.tsv", timeline);

  std::string coarse = "process\tpid\telapsed_s\tuser_s\tsystem_s\tother_s\toversubscribed\n";
  const CoarseBreakdown gm_coarse = read_self_times(start_ns);
  coarse += coarse_tsv_row("gm", ::getpid(), gm_coarse);
  summary.entities.push_back({"gm", std::string(to_string(NodeRole::kGlobalManager)), ::getpid(),
                              0, gm_coarse});

  std::uint64_t planned = 0;
  std::uint64_t sent = 0;
  std::uint64_t answered = 0;
  for (const EntityHandle* h : topology.entities()) {
    if (h->coarse) coarse += coarse_tsv_row(h->spec.name, h->pid, *h->coarse);
    summary.entities.push_back(
        {h->spec.name, std::string(to_string(h->spec.role)), h->pid, h->exit_status, h->coarse});
    if (!h->result) {
      outcome.problems.push_back(h->spec.name + ": no result");
    } else if (!h->result->clean_exit) {
      outcome.problems.push_back(h->spec.name + ": " + h->result->error);
    } else if (h->exit_status != 0) {
      outcome.problems.push_back(fmt::format("{}: exit status {}", h->spec.name, h->exit_status));
    }
    if (h->result && h->result->load) {
      planned += h->result->load->planned;
      sent += h->result->load->sent;
      answered += h->result->load->answered;
    }
  }
  write_text(plan.out / "coarse.tsv", coarse);
  outcome.clean = outcome.problems.empty();

  summary.facts = {
      {"requests_planned", std::to_string(planned)},
      {"requests_sent", std::to_string(sent)},
      {"requests_answered", std::to_string(answered)},
      {"heartbeats_at_manager", std::to_string(topology.heartbeats_received())},
      {"failures_detected", std::to_string(topology.liveness().report().failures.size())},
      {"manager_poll_share", detail::format_double(topology.manager_loop().poll_share())},
      {"event_overhead_ns", std::to_string(calibration.event_overhead_ns)},
  };
  for (const std::string& p : outcome.problems) summary.facts.emplace_back("problem", p);
  write_text(plan.out / "run.txt", render_summary(summary));
  write_dump_index(plan.out);
  return outcome;
}

Profile load_inputs(const std::vector<std::filesystem::path>& inputs) {
  std::vector<Dump> dumps;
  std::vector<Profile> profiles;
  for (const std::filesystem::path& input : inputs) {
    if (std::filesystem::is_directory(input)) {
      std::vector<std::filesystem::path> files;
      for (const auto& entry : std::filesystem::directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == ".dump") {
          files.push_back(entry.path());
        }
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) dumps.push_back(load_dump(f));
    } else if (!std::filesystem::exists(input)) {
      throw Error(ErrorCode::kConfig, "no such input: " + input.string());
    } else if (input.extension() == ".json") {
      profiles.push_back(load_profile(input));
    } else {
      dumps.push_back(load_dump(input));
    }
  }
  if (dumps.empty() && profiles.empty()) {
    throw Error(ErrorCode::kConfig, "no dumps or profiles among the inputs");
  }
  if (!dumps.empty()) profiles.insert(profiles.begin(), merge_dumps(dumps));
  if (profiles.size() == 1) return std::move(profiles.front());
  return merge_profiles(profiles);
}

CategoryRules load_rules(const std::optional<std::filesystem::path>& path) {
  return path ? CategoryRules::load(*path) : CategoryRules::defaults();
}

std::filesystem::path cmd_analyze(const std::vector<std::filesystem::path>& inputs,
                                  const std::optional<std::filesystem::path>& rules,
                                  double threshold_pct, const std::filesystem::path& out,
                                  ReportFormat format) {
  const Profile profile = load_inputs(inputs);
  const auto findings = find_hotspots(profile, load_rules(rules), threshold_pct);
  ReportSpec spec;
  spec.kind = ReportKind::kHotspotReport;
  spec.threshold_pct = threshold_pct;
  spec.format = format;
  write_text(out, render(std::span<const HotspotFinding>(findings), spec));
  return out;
}

void cmd_report(const std::vector<std::filesystem::path>& inputs, const ReportSpec& spec,
                const std::optional<std::filesystem::path>& rules) {
  const Profile profile = load_inputs(inputs);
  std::string text;
  switch (spec.kind) {
    case ReportKind::kHotspotReport: {
      const auto findings = find_hotspots(profile, load_rules(rules), spec.threshold_pct);
      text = render(std::span<const HotspotFinding>(findings), spec);
      break;
    }
    case ReportKind::kCompareReport:
      throw Error(ErrorCode::kConfig, "compare reports come from the compare subcommand");
    default: text = render(profile, spec); break;
  }
  emit(text, spec);
}

std::filesystem::path cmd_compare(const std::vector<std::filesystem::path>& before,
                                  const std::vector<std::filesystem::path>& after,
                                  const std::optional<std::filesystem::path>& rules,
                                  double epsilon_s, const ReportSpec& spec,
                                  const std::filesystem::path& out) {
  const CompareReport report =
      compare(load_inputs(before), load_inputs(after), load_rules(rules), epsilon_s);
  ReportSpec compare_spec = spec;
  compare_spec.kind = ReportKind::kCompareReport;
  const std::string text = render(report, compare_spec);
  if (out.empty()) {
    std::cout << text;
    return out;
  }
  write_text(out, text);
  return out;
}

OverheadBudget overhead_budget(const Calibration& calibration) {
  OverheadBudget budget;
  budget.calibration = calibration;
  const double pair_ns = 2.0 * static_cast<double>(calibration.event_overhead_ns);
  budget.inflation_pct_at_10us = 100.0 * pair_ns / 10'000.0;
  budget.inflation_pct_at_1ms = 100.0 * pair_ns / 1'000'000.0;
  return budget;
}

std::string budget_to_text(const OverheadBudget& budget) {
  return fmt::format(
      "event_overhead_ns\t{}\nclock_resolution_ns\t{}\npair_overhead_ns\t{}\n"
      "inflation_pct_at_10us\t{}\ninflation_pct_at_1ms\t{}\n",
      budget.calibration.event_overhead_ns, budget.calibration.clock_resolution_ns,
      2 * budget.calibration.event_overhead_ns,
      detail::format_double(round_half_up(budget.inflation_pct_at_10us, 3)),
      detail::format_double(round_half_up(budget.inflation_pct_at_1ms, 5)));
}

std::filesystem::path cmd_calibrate(const std::filesystem::path& out) {
  write_text(out, budget_to_text(overhead_budget(calibrate())));
  return out;
}

int cmd_entity() {
  const std::int64_t start_ns = wall_now_ns();
  const EntitySpec spec = entity_spec_from_environment();
  const std::filesystem::path run_dir = env_or("TIERPROF_RUN_DIR", ".");
  const ScenarioConfig config = load_scenario(env_or("TIERPROF_SCENARIO_FILE"));
  const Levels levels = Levels::parse(env_or("TIERPROF_LEVELS", "all"));
  Calibration calibration;
  calibration.event_overhead_ns = env_i64("TIERPROF_EVENT_OVERHEAD_NS", 0);
  calibration.clock_resolution_ns = env_i64("TIERPROF_CLOCK_RESOLUTION_NS", 1);

  Recorder& recorder = Recorder::global();
  recorder.set_levels(levels);
  SamplingGuard sampling(levels, config.sample_interval_ms);
  const EntityResult result = run_entity(spec, config);
  SampleStream samples = sampling.finish();
  recorder.set_levels(Levels());

  save_dump(collect_dump(env_or("TIERPROF_RUN_ID", "run"), config, spec.name, levels, calibration,
                         start_ns, std::move(samples)),
            run_dir / (spec.name + ".dump"));
  write_text_atomic(run_dir / (spec.name + ".result"), result_to_text(result));
  if (!result.clean_exit) {
    std::cerr << spec.name << ": " << result.error << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace tierprof
