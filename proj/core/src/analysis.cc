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

#include "tierprof/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "tierprof/error.h"

namespace tierprof {

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The epsilon absorbs binary representation error so that e.g. 1.445
  // (stored as 1.44499999...) still rounds up.
  const double scaled = value * scale;
  const double nudge = 1e-9 * std::max(1.0, std::abs(scaled));
  return (scaled >= 0 ? std::floor(scaled + 0.5 + nudge) : -std::floor(-scaled + 0.5 + nudge)) / scale;
}

CoarsePercentages coarse_percentages(const CoarseBreakdown& b) {
  if (!(b.elapsed_s > 0)) throw Error(ErrorCode::kZeroElapsed, "elapsed time must be positive");
  CoarsePercentages p;
  p.user_pct = 100.0 * b.user_s / b.elapsed_s;
  p.sys_pct = 100.0 * b.system_s / b.elapsed_s;
  p.other_pct = 100.0 * b.other_s / b.elapsed_s;
  return p;
}

RuntimeShare share_of_runtime(std::span<const double> component_times,
                              std::span<const double> run_times) {
  if (component_times.size() != run_times.size()) {
    throw Error(ErrorCode::kLengthMismatch, "component and run lists differ in length");
  }
  RuntimeShare share;
  if (run_times.empty()) return share;
  double component_sum = 0;
  double run_sum = 0;
  for (std::size_t i = 0; i < run_times.size(); ++i) {
    if (!(run_times[i] > 0)) {
      throw Error(ErrorCode::kZeroRuntime, "run " + std::to_string(i) + " has no run time");
    }
    share.per_run_pct.push_back(100.0 * component_times[i] / run_times[i]);
    component_sum += component_times[i];
    run_sum += run_times[i];
  }
  share.pooled_pct = 100.0 * component_sum / run_sum;
  share.mean_pct = std::accumulate(share.per_run_pct.begin(), share.per_run_pct.end(), 0.0) /
                   static_cast<double>(share.per_run_pct.size());
  return share;
}

double CategoryBreakdown::share_pct(TimeCategory c) const {
  if (total_ns <= 0) return 0.0;
  return 100.0 * static_cast<double>(category_ns(c)) / static_cast<double>(total_ns);
}

CategoryBreakdown classify(const Profile& profile, const CategoryRules& rules) {
  CategoryBreakdown out;
  auto attribute = [&](const CodeSite& site, TimeCategory category, std::int64_t ns) {
    if (ns <= 0) return;
    out.ns[static_cast<std::size_t>(category)] += ns;
    out.total_ns += ns;
    out.sites.push_back({site, category, ns});
  };
  for (const FunctionStats& f : profile.functions) {
    const std::int64_t exclusive = std::max<std::int64_t>(0, f.tottime_ns);
    if (f.tag) {
      attribute(f.site, *f.tag, exclusive);
    } else if (auto ruled = rules.match(f.site)) {
      attribute(f.site, *ruled, exclusive);
    } else {
      const std::int64_t cpu = std::clamp<std::int64_t>(f.tottime_cpu_ns, 0, exclusive);
      attribute(f.site, TimeCategory::kUserCompute, cpu);
      attribute(f.site, TimeCategory::kOther, exclusive - cpu);
    }
  }
  return out;
}

std::string_view recommendation_for(TimeCategory category) {
  switch (category) {
    case TimeCategory::kIoWaitPoll:
      return "Fixed-timeout socket polling dominates: block on readiness with a longer or "
             "infinite timeout, or move to event notification, and batch request/response "
             "round trips.";
    case TimeCategory::kSleep:
      return "Hard-coded sleeps sit on the critical path: wait for an explicit readiness "
             "signal instead, or shorten and tune each duration.";
    case TimeCategory::kHeartbeat:
      return "Liveness checking is costly: lengthen the heartbeat interval, piggyback liveness "
             "on regular traffic, or aggregate heartbeats per site.";
    case TimeCategory::kVmLifecycle:
      return "Creating and tearing down entities is expensive: pre-provision or reuse them, "
             "and start independent entities in parallel.";
    case TimeCategory::kUserCompute:
      return "CPU-bound application code: profile the hot function at statement level.";
    case TimeCategory::kKernel:
      return "System-call heavy: coalesce small writes and flushes.";
    case TimeCategory::kOther:
      return "Unattributed waiting: add region instrumentation around the blocking calls.";
  }
  return "";
}

int remediation_for(TimeCategory category) {
  switch (category) {
    case TimeCategory::kIoWaitPoll: return 1;
    case TimeCategory::kSleep: return 2;
    case TimeCategory::kHeartbeat: return 3;
    case TimeCategory::kVmLifecycle: return 4;
    default: return 0;
  }
}

std::vector<HotspotFinding> find_hotspots(const Profile& profile, const CategoryRules& rules,
                                          double min_share_pct) {
  const CategoryBreakdown breakdown = classify(profile, rules);
  std::vector<HotspotFinding> findings;
  for (TimeCategory category : kAllTimeCategories) {
    const double share = breakdown.share_pct(category);
    if (share <= 0 || share < min_share_pct) continue;

    std::vector<const SiteAttribution*> members;
    for (const SiteAttribution& a : breakdown.sites) {
      if (a.category == category) members.push_back(&a);
    }
    std::stable_sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      if (a->ns != b->ns) return a->ns > b->ns;
      return site_label(a->site) < site_label(b->site);
    });

    HotspotFinding finding;
    finding.category = category;
    finding.site = members.front()->site;
    finding.share_pct = share;
    finding.remediation = remediation_for(category);
    finding.recommendation = std::string(recommendation_for(category));
    for (std::size_t i = 0; i < members.size() && finding.evidence.size() < 3; ++i) {
      for (const FunctionStats& f : profile.functions) {
        if (f.site == members[i]->site) finding.evidence.push_back(f);
      }
    }
    findings.push_back(std::move(finding));
  }
  std::stable_sort(findings.begin(), findings.end(), [](const auto& a, const auto& b) {
    if (a.share_pct != b.share_pct) return a.share_pct > b.share_pct;
    return site_label(a.site) < site_label(b.site);
  });
  return findings;
}

double SiteDelta::cumtime_change_pct() const {
  if (cumtime_before_ns == 0) return cumtime_after_ns == 0 ? 0.0 : 100.0;
  return 100.0 * static_cast<double>(cumtime_delta_ns()) / static_cast<double>(cumtime_before_ns);
}

CompareReport compare(const Profile& before, const Profile& after, const CategoryRules& rules,
                      double epsilon_s) {
  if (before.scenario_id != after.scenario_id) {
    throw Error(ErrorCode::kScenarioMismatch,
                "scenario '" + before.scenario_id + "' vs '" + after.scenario_id + "'");
  }
  if (before.scale_factor != after.scale_factor) {
    throw Error(ErrorCode::kScenarioMismatch, "scale factors differ");
  }
  CompareReport report;
  report.scenario_id = before.scenario_id;
  report.scale_factor = before.scale_factor;
  report.before_run = before.run_id;
  report.after_run = after.run_id;
  report.epsilon_s = epsilon_s;

  const CategoryBreakdown a = classify(before, rules);
  const CategoryBreakdown b = classify(after, rules);
  const std::int64_t epsilon_ns = to_nanos(epsilon_s);
  for (TimeCategory c : kAllTimeCategories) {
    CategoryDelta d;
    d.category = c;
    d.before_ns = a.category_ns(c);
    d.after_ns = b.category_ns(c);
    d.before_pct = a.share_pct(c);
    d.after_pct = b.share_pct(c);
    d.regression = d.delta_ns() > epsilon_ns;
    if (d.regression) report.regressions.push_back(c);
    report.categories.push_back(d);
  }

  std::map<CodeSite, SiteDelta> sites;
  for (const FunctionStats& f : before.functions) {
    SiteDelta& d = sites[f.site];
    d.site = f.site;
    d.ncalls_before = f.ncalls_total;
    d.tottime_before_ns = f.tottime_ns;
    d.cumtime_before_ns = f.cumtime_ns;
  }
  for (const FunctionStats& f : after.functions) {
    SiteDelta& d = sites[f.site];
    d.site = f.site;
    d.ncalls_after = f.ncalls_total;
    d.tottime_after_ns = f.tottime_ns;
    d.cumtime_after_ns = f.cumtime_ns;
  }
  for (auto& [site, d] : sites) report.sites.push_back(d);
  std::stable_sort(report.sites.begin(), report.sites.end(), [](const auto& x, const auto& y) {
    return std::llabs(x.cumtime_delta_ns()) > std::llabs(y.cumtime_delta_ns());
  });
  return report;
}

}  // namespace tierprof
