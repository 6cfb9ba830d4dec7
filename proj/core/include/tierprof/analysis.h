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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tierprof/category_rules.h"
#include "tierprof/process_times.h"
#include "tierprof/profile_model.h"

namespace tierprof {

// Half-up rounding; used only when presenting numbers.
double round_half_up(double value, int decimals = 2);

struct CoarsePercentages {
  double user_pct = 0;
  double sys_pct = 0;
  // I/O wait plus anything else not accounted to user or kernel CPU.
  double other_pct = 0;
};

// Throws Error(kZeroElapsed).
CoarsePercentages coarse_percentages(const CoarseBreakdown& b);

struct RuntimeShare {
  std::vector<double> per_run_pct;
  // 100 * sum(component) / sum(run): the time-weighted share over all runs.
  double pooled_pct = 0;
  // Unweighted mean of per_run_pct, reported alongside for contrast.
  double mean_pct = 0;
};

// Throws Error(kLengthMismatch) or Error(kZeroRuntime).
RuntimeShare share_of_runtime(std::span<const double> component_times,
                              std::span<const double> run_times);

struct SiteAttribution {
  CodeSite site;
  TimeCategory category;
  std::int64_t ns = 0;
};

struct CategoryBreakdown {
  std::array<std::int64_t, kTimeCategoryCount> ns{};
  std::int64_t total_ns = 0;
  std::vector<SiteAttribution> sites;

  std::int64_t category_ns(TimeCategory c) const { return ns[static_cast<std::size_t>(c)]; }
  double share_pct(TimeCategory c) const;
};

// Splits every site's exclusive wall time into categories. Precedence:
// instrumentation tag, then the first matching rule; time of untagged,
// unmatched sites is UserCompute up to its exclusive CPU time and Other for
// the remainder.
CategoryBreakdown classify(const Profile& profile, const CategoryRules& rules);

struct HotspotFinding {
  TimeCategory category;
  CodeSite site;  // dominant site of the category
  double share_pct = 0;
  std::vector<FunctionStats> evidence;
  // 1 polling, 2 sleeps, 3 heartbeats, 4 entity lifecycle; 0 otherwise.
  int remediation = 0;
  std::string recommendation;
};

std::string_view recommendation_for(TimeCategory category);
int remediation_for(TimeCategory category);

// One finding per category whose share is at least `min_share_pct` (and
// non-zero), ordered by share descending then site label.
std::vector<HotspotFinding> find_hotspots(const Profile& profile, const CategoryRules& rules,
                                          double min_share_pct);

struct CategoryDelta {
  TimeCategory category;
  std::int64_t before_ns = 0;
  std::int64_t after_ns = 0;
  double before_pct = 0;
  double after_pct = 0;
  bool regression = false;

  std::int64_t delta_ns() const { return after_ns - before_ns; }
  double delta_pct_points() const { return after_pct - before_pct; }
};

struct SiteDelta {
  CodeSite site;
  std::uint64_t ncalls_before = 0;
  std::uint64_t ncalls_after = 0;
  std::int64_t tottime_before_ns = 0;
  std::int64_t tottime_after_ns = 0;
  std::int64_t cumtime_before_ns = 0;
  std::int64_t cumtime_after_ns = 0;

  std::int64_t tottime_delta_ns() const { return tottime_after_ns - tottime_before_ns; }
  std::int64_t cumtime_delta_ns() const { return cumtime_after_ns - cumtime_before_ns; }
  // Relative change of inclusive time; 0 when both sides are zero.
  double cumtime_change_pct() const;
};

struct CompareReport {
  std::string scenario_id;
  double scale_factor = 1.0;
  std::string before_run;
  std::string after_run;
  double epsilon_s = 0;
  std::vector<CategoryDelta> categories;
  std::vector<SiteDelta> sites;  // largest |cumtime delta| first
  std::vector<TimeCategory> regressions;
};

// A category regresses when it grows by more than `epsilon_s` seconds.
// Throws Error(kScenarioMismatch) when scenario id or scale factor differ.
CompareReport compare(const Profile& before, const Profile& after, const CategoryRules& rules,
                      double epsilon_s = 0.05);

}  // namespace tierprof
