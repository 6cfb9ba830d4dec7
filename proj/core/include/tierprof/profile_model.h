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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tierprof/dump.h"
#include "tierprof/process_times.h"
#include "tierprof/types.h"

namespace tierprof {

enum class ClockType : std::uint8_t { kWall, kCpu };

std::string_view to_string(ClockType clock);

// Deterministic per-function statistics with cProfile semantics: every
// activation counts toward ncalls_total and the exclusive time; only
// primitive (not recursively re-entered) activations count toward
// ncalls_primitive and the inclusive time, so recursion never double counts.
//
//   f enters, calls f, which calls g; everything returns
//     f: ncalls 2/1, cumtime = outer f span, tottime = both f spans minus
//        their direct children
struct FunctionStats {
  CodeSite site;
  std::optional<TimeCategory> tag;
  std::uint64_t ncalls_total = 0;
  std::uint64_t ncalls_primitive = 0;
  std::int64_t tottime_ns = 0;
  std::int64_t cumtime_ns = 0;
  std::int64_t tottime_cpu_ns = 0;
  std::int64_t cumtime_cpu_ns = 0;

  std::int64_t tottime(ClockType clock) const {
    return clock == ClockType::kWall ? tottime_ns : tottime_cpu_ns;
  }
  std::int64_t cumtime(ClockType clock) const {
    return clock == ClockType::kWall ? cumtime_ns : cumtime_cpu_ns;
  }
  double tottime_s() const { return to_seconds(tottime_ns); }
  double cumtime_s() const { return to_seconds(cumtime_ns); }
  // Exclusive time per call (first pstats percall column).
  double percall_tot_s() const {
    return ncalls_total ? tottime_s() / static_cast<double>(ncalls_total) : 0.0;
  }
  // Inclusive time per primitive call (second percall column).
  double percall_cum_s() const {
    return ncalls_primitive ? cumtime_s() / static_cast<double>(ncalls_primitive) : 0.0;
  }
};

// Statement/region statistics inside one enclosing function (the scope).
struct RegionStats {
  CodeSite scope;
  CodeSite site;
  std::optional<TimeCategory> tag;
  std::uint64_t hits = 0;
  std::int64_t time_ns = 0;
  // Inclusive time of the scope function; the percentage denominator.
  std::int64_t scope_time_ns = 0;

  double time_s() const { return to_seconds(time_ns); }
  std::optional<double> per_hit_s() const {
    if (hits == 0) return std::nullopt;
    return time_s() / static_cast<double>(hits);
  }
  double pct_time() const {
    if (scope_time_ns <= 0) return 0.0;
    return 100.0 * static_cast<double>(time_ns) / static_cast<double>(scope_time_ns);
  }
};

// One row of a thread-aware profile: a site as seen from one thread.
struct ThreadStats {
  std::string process;
  std::uint32_t thread_id = 0;
  std::string thread_name;
  CodeSite site;
  std::optional<TimeCategory> tag;
  std::uint64_t ncall_total = 0;
  std::uint64_t ncall_primitive = 0;
  std::int64_t tsub_wall_ns = 0;
  std::int64_t ttot_wall_ns = 0;
  std::int64_t tsub_cpu_ns = 0;
  std::int64_t ttot_cpu_ns = 0;

  std::int64_t tsub_ns(ClockType clock) const {
    return clock == ClockType::kWall ? tsub_wall_ns : tsub_cpu_ns;
  }
  std::int64_t ttot_ns(ClockType clock) const {
    return clock == ClockType::kWall ? ttot_wall_ns : ttot_cpu_ns;
  }
  double tavg_s(ClockType clock) const {
    return ncall_total ? to_seconds(ttot_ns(clock)) / static_cast<double>(ncall_total) : 0.0;
  }
};

// Collapsed sampled stack ("outer;inner;leaf") with its sample count.
struct StackCount {
  std::string stack;
  std::uint64_t count = 0;
};

struct ProcessInfo {
  std::string name;
  std::int64_t pid = 0;
  std::uint64_t events = 0;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  bool samples_partial = false;
  std::string levels;
  Calibration calibration;
  std::optional<CoarseBreakdown> coarse;
};

struct Profile {
  std::string run_id;
  std::string scenario_id;
  double scale_factor = 1.0;
  std::vector<ProcessInfo> processes;
  std::vector<FunctionStats> functions;
  std::vector<RegionStats> regions;
  std::vector<ThreadStats> threads;
  std::vector<StackCount> stacks;

  const FunctionStats* find_function(std::string_view symbol) const;
  std::vector<RegionStats> regions_in(std::string_view scope) const;
  std::int64_t total_tottime_ns() const;
  std::uint64_t total_calls() const;
  std::uint64_t total_primitive_calls() const;
};

// All aggregations replay the event stream per thread. Exits that close a
// frame below the top implicitly close the frames above it at the same
// instant, and frames still open at the end of a thread's events are closed
// at that thread's last timestamp. An exit for a site that is not open, an
// unknown site id, or a wall clock that runs backwards is MalformedStream.
std::vector<FunctionStats> aggregate_functions(std::span<const ProfileEvent> events,
                                               std::span<const SiteRecord> sites);

// `function_scope` matches a Function site by symbol or by its
// "file:line(symbol)" label. Throws Error(kUnknownScope).
std::vector<RegionStats> aggregate_regions(std::span<const ProfileEvent> events,
                                           std::span<const SiteRecord> sites,
                                           std::string_view function_scope);

std::vector<ThreadStats> aggregate_threads(std::span<const ProfileEvent> events,
                                           std::span<const SiteRecord> sites,
                                           std::span<const ThreadRecord> threads = {},
                                           std::string_view process = {});

std::vector<StackCount> aggregate_samples(std::span<const StackSample> samples,
                                          std::span<const SiteRecord> sites);

Profile aggregate(const Dump& dump);

// Field-wise sums per site; processes are kept side by side, never clock
// compared. Throws Error(kRunIdMismatch) when run ids differ.
Profile merge_profiles(std::span<const Profile> parts);
Profile merge_dumps(std::span<const Dump> dumps);

inline constexpr int kProfileFormatVersion = 1;

// Versioned JSON ("tierprof-profile") carrying every stat field losslessly.
std::string profile_to_json(const Profile& profile);
Profile profile_from_json(std::string_view text);
void save_profile(const Profile& profile, const std::filesystem::path& path);
Profile load_profile(const std::filesystem::path& path);

}  // namespace tierprof
