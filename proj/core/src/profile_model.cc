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

#include "tierprof/profile_model.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "tierprof/error.h"

namespace tierprof {

std::string_view to_string(ClockType clock) { return clock == ClockType::kWall ? "WALL" : "CPU"; }

namespace {

struct Frame {
  SiteId site = 0;
  std::int64_t enter_wall = 0;
  std::int64_t enter_cpu = 0;
  std::int64_t child_wall = 0;
  std::int64_t child_cpu = 0;
  bool primitive = true;
};

struct ClosedFrame {
  std::uint32_t thread_id;
  const Frame& frame;
  std::int64_t span_wall;
  std::int64_t span_cpu;
  // Frames still open beneath the closed one, outermost first.
  const std::vector<Frame>& below;
};

struct ThreadState {
  std::vector<Frame> stack;
  std::unordered_map<SiteId, std::uint32_t> active;
  std::int64_t last_wall = std::numeric_limits<std::int64_t>::min();
  std::int64_t last_cpu = std::numeric_limits<std::int64_t>::min();
};

template <typename OnClose>
void replay(std::span<const ProfileEvent> events, std::size_t site_count, OnClose&& on_close) {
  std::map<std::uint32_t, ThreadState> threads;

  auto close_top = [&](std::uint32_t tid, ThreadState& t, std::int64_t wall, std::int64_t cpu) {
    const Frame f = t.stack.back();
    t.stack.pop_back();
    const std::int64_t span_wall = wall - f.enter_wall;
    const std::int64_t span_cpu = cpu - f.enter_cpu;
    if (!t.stack.empty()) {
      t.stack.back().child_wall += span_wall;
      t.stack.back().child_cpu += span_cpu;
    }
    --t.active[f.site];
    on_close(ClosedFrame{tid, f, span_wall, span_cpu, t.stack});
  };

  for (const ProfileEvent& e : events) {
    if (e.site >= site_count) {
      throw Error(ErrorCode::kMalformedStream, "event references unknown site " + std::to_string(e.site));
    }
    ThreadState& t = threads[e.thread_id];
    if (e.wall_ns < t.last_wall) {
      throw Error(ErrorCode::kMalformedStream,
                  "wall clock runs backwards on thread " + std::to_string(e.thread_id));
    }
    t.last_wall = e.wall_ns;
    t.last_cpu = std::max(t.last_cpu, e.cpu_ns);
    if (e.kind == EventKind::kEnter) {
      auto& active = t.active[e.site];
      t.stack.push_back({e.site, e.wall_ns, e.cpu_ns, 0, 0, active == 0});
      ++active;
      continue;
    }
    const bool open = std::any_of(t.stack.begin(), t.stack.end(),
                                  [&](const Frame& f) { return f.site == e.site; });
    if (!open) {
      throw Error(ErrorCode::kMalformedStream, "exit without matching enter for site " +
                                                   std::to_string(e.site) + " on thread " +
                                                   std::to_string(e.thread_id));
    }
    while (t.stack.back().site != e.site) close_top(e.thread_id, t, e.wall_ns, e.cpu_ns);
    close_top(e.thread_id, t, e.wall_ns, e.cpu_ns);
  }
  for (auto& [tid, t] : threads) {
    while (!t.stack.empty()) close_top(tid, t, t.last_wall, t.last_cpu);
  }
}

void add_to(FunctionStats& s, const ClosedFrame& c) {
  ++s.ncalls_total;
  s.tottime_ns += c.span_wall - c.frame.child_wall;
  s.tottime_cpu_ns += c.span_cpu - c.frame.child_cpu;
  if (c.frame.primitive) {
    ++s.ncalls_primitive;
    s.cumtime_ns += c.span_wall;
    s.cumtime_cpu_ns += c.span_cpu;
  }
}

bool is_region_like(SiteKind kind) { return kind != SiteKind::kFunction; }

// The function activation a region belongs to: the nearest Function frame
// below it, provided no other region of that activation encloses it and the
// activation is the outermost one of its function. Counted regions of a scope
// are therefore disjoint and sum to at most the scope's inclusive time.
std::optional<SiteId> region_scope(const ClosedFrame& c, std::span<const SiteRecord> sites) {
  for (auto it = c.below.rbegin(); it != c.below.rend(); ++it) {
    const SiteKind kind = sites[it->site].site.kind;
    if (is_region_like(kind)) return std::nullopt;
    if (!it->primitive) return std::nullopt;
    return it->site;
  }
  return std::nullopt;
}

bool matches_scope(const CodeSite& site, std::string_view scope) {
  return site.kind == SiteKind::kFunction && (site.symbol == scope || site_label(site) == scope);
}

template <typename Stats>
void apply_tag(Stats& s, const SiteRecord& record) {
  s.site = record.site;
  s.tag = record.tag;
}

struct RegionKey {
  SiteId scope;
  SiteId site;
  friend auto operator<=>(const RegionKey&, const RegionKey&) = default;
};

std::vector<RegionStats> collect_regions(std::span<const ProfileEvent> events,
                                         std::span<const SiteRecord> sites,
                                         std::optional<SiteId> only_scope,
                                         const std::vector<FunctionStats>* functions) {
  std::map<RegionKey, RegionStats> regions;
  std::map<SiteId, FunctionStats> scopes;
  replay(events, sites.size(), [&](const ClosedFrame& c) {
    if (!is_region_like(sites[c.frame.site].site.kind)) {
      if (!functions) add_to(scopes[c.frame.site], c);
      return;
    }
    const auto scope = region_scope(c, sites);
    if (!scope || (only_scope && *scope != *only_scope)) return;
    RegionStats& r = regions[{*scope, c.frame.site}];
    ++r.hits;
    r.time_ns += c.span_wall;
  });
  std::vector<RegionStats> out;
  out.reserve(regions.size());
  for (auto& [key, r] : regions) {
    apply_tag(r, sites[key.site]);
    r.scope = sites[key.scope].site;
    if (functions) {
      for (const FunctionStats& f : *functions) {
        if (f.site == r.scope) r.scope_time_ns = f.cumtime_ns;
      }
    } else {
      r.scope_time_ns = scopes[key.scope].cumtime_ns;
    }
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const RegionStats& a, const RegionStats& b) {
    return std::tie(a.scope, a.site) < std::tie(b.scope, b.site);
  });
  return out;
}

}  // namespace

std::vector<FunctionStats> aggregate_functions(std::span<const ProfileEvent> events,
                                               std::span<const SiteRecord> sites) {
  std::map<SiteId, FunctionStats> stats;
  replay(events, sites.size(), [&](const ClosedFrame& c) { add_to(stats[c.frame.site], c); });
  std::vector<FunctionStats> out;
  out.reserve(stats.size());
  for (auto& [id, s] : stats) {
    apply_tag(s, sites[id]);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const FunctionStats& a, const FunctionStats& b) { return a.site < b.site; });
  return out;
}

std::vector<RegionStats> aggregate_regions(std::span<const ProfileEvent> events,
                                           std::span<const SiteRecord> sites,
                                           std::string_view function_scope) {
  std::optional<SiteId> scope;
  for (std::size_t id = 0; id < sites.size(); ++id) {
    if (matches_scope(sites[id].site, function_scope)) {
      scope = static_cast<SiteId>(id);
      break;
    }
  }
  if (!scope) throw Error(ErrorCode::kUnknownScope, "no function named '" + std::string(function_scope) + "'");
  return collect_regions(events, sites, scope, nullptr);
}

std::vector<ThreadStats> aggregate_threads(std::span<const ProfileEvent> events,
                                           std::span<const SiteRecord> sites,
                                           std::span<const ThreadRecord> threads,
                                           std::string_view process) {
  std::map<std::pair<std::uint32_t, SiteId>, ThreadStats> rows;
  replay(events, sites.size(), [&](const ClosedFrame& c) {
    ThreadStats& r = rows[{c.thread_id, c.frame.site}];
    ++r.ncall_total;
    r.tsub_wall_ns += c.span_wall - c.frame.child_wall;
    r.tsub_cpu_ns += c.span_cpu - c.frame.child_cpu;
    if (c.frame.primitive) {
      ++r.ncall_primitive;
      r.ttot_wall_ns += c.span_wall;
      r.ttot_cpu_ns += c.span_cpu;
    }
  });
  std::vector<ThreadStats> out;
  out.reserve(rows.size());
  for (auto& [key, r] : rows) {
    r.process = std::string(process);
    r.thread_id = key.first;
    for (const ThreadRecord& t : threads) {
      if (t.thread_id == key.first) r.thread_name = t.name;
    }
    apply_tag(r, sites[key.second]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StackCount> aggregate_samples(std::span<const StackSample> samples,
                                          std::span<const SiteRecord> sites) {
  std::map<std::string, std::uint64_t> counts;
  for (const StackSample& s : samples) {
    std::string key;
    for (SiteId id : s.stack) {
      if (!key.empty()) key += ';';
      key += id < sites.size() ? site_label(sites[id].site) : "?";
    }
    ++counts[key.empty() ? "<idle>" : key];
  }
  std::vector<StackCount> out;
  for (auto& [stack, count] : counts) out.push_back({stack, count});
  return out;
}

Profile aggregate(const Dump& dump) {
  Profile p;
  p.run_id = dump.header.run_id;
  p.scenario_id = dump.header.scenario_id;
  p.scale_factor = dump.header.scale_factor;
  ProcessInfo info;
  info.name = dump.header.process;
  info.pid = dump.header.pid;
  info.events = dump.events.size();
  info.samples = dump.samples.size();
  info.violations = dump.violations.size();
  info.samples_partial = dump.header.samples_partial;
  info.levels = dump.header.levels;
  info.calibration = dump.header.calibration;
  info.coarse = dump.header.coarse;
  p.processes.push_back(std::move(info));
  p.functions = aggregate_functions(dump.events, dump.sites);
  p.regions = collect_regions(dump.events, dump.sites, std::nullopt, &p.functions);
  p.threads = aggregate_threads(dump.events, dump.sites, dump.threads, dump.header.process);
  p.stacks = aggregate_samples(dump.samples, dump.sites);
  return p;
}

const FunctionStats* Profile::find_function(std::string_view symbol) const {
  for (const FunctionStats& f : functions) {
    if (f.site.symbol == symbol || site_label(f.site) == symbol) return &f;
  }
  return nullptr;
}

std::vector<RegionStats> Profile::regions_in(std::string_view scope) const {
  std::vector<RegionStats> out;
  bool known = false;
  for (const FunctionStats& f : functions) known = known || matches_scope(f.site, scope);
  if (!known) throw Error(ErrorCode::kUnknownScope, "no function named '" + std::string(scope) + "'");
  for (const RegionStats& r : regions) {
    if (matches_scope(r.scope, scope)) out.push_back(r);
  }
  return out;
}

std::int64_t Profile::total_tottime_ns() const {
  std::int64_t total = 0;
  for (const FunctionStats& f : functions) total += f.tottime_ns;
  return total;
}

std::uint64_t Profile::total_calls() const {
  std::uint64_t total = 0;
  for (const FunctionStats& f : functions) total += f.ncalls_total;
  return total;
}

std::uint64_t Profile::total_primitive_calls() const {
  std::uint64_t total = 0;
  for (const FunctionStats& f : functions) total += f.ncalls_primitive;
  return total;
}

Profile merge_profiles(std::span<const Profile> parts) {
  Profile merged;
  if (parts.empty()) return merged;
  merged.run_id = parts.front().run_id;
  merged.scenario_id = parts.front().scenario_id;
  merged.scale_factor = parts.front().scale_factor;

  std::map<CodeSite, FunctionStats> functions;
  std::map<std::pair<CodeSite, CodeSite>, RegionStats> regions;
  std::map<std::tuple<std::string, std::uint32_t, CodeSite>, ThreadStats> threads;
  std::map<std::string, std::uint64_t> stacks;

  for (const Profile& part : parts) {
    if (part.run_id != merged.run_id) {
      throw Error(ErrorCode::kRunIdMismatch,
                  "cannot merge run '" + part.run_id + "' into run '" + merged.run_id + "'");
    }
    merged.processes.insert(merged.processes.end(), part.processes.begin(), part.processes.end());
    for (const FunctionStats& f : part.functions) {
      auto [it, fresh] = functions.try_emplace(f.site, f);
      if (fresh) continue;
      FunctionStats& m = it->second;
      m.ncalls_total += f.ncalls_total;
      m.ncalls_primitive += f.ncalls_primitive;
      m.tottime_ns += f.tottime_ns;
      m.cumtime_ns += f.cumtime_ns;
      m.tottime_cpu_ns += f.tottime_cpu_ns;
      m.cumtime_cpu_ns += f.cumtime_cpu_ns;
      if (!m.tag) m.tag = f.tag;
    }
    for (const RegionStats& r : part.regions) {
      auto [it, fresh] = regions.try_emplace({r.scope, r.site}, r);
      if (fresh) continue;
      it->second.hits += r.hits;
      it->second.time_ns += r.time_ns;
      it->second.scope_time_ns += r.scope_time_ns;
    }
    for (const ThreadStats& t : part.threads) {
      auto [it, fresh] = threads.try_emplace({t.process, t.thread_id, t.site}, t);
      if (fresh) continue;
      ThreadStats& m = it->second;
      m.ncall_total += t.ncall_total;
      m.ncall_primitive += t.ncall_primitive;
      m.tsub_wall_ns += t.tsub_wall_ns;
      m.ttot_wall_ns += t.ttot_wall_ns;
      m.tsub_cpu_ns += t.tsub_cpu_ns;
      m.ttot_cpu_ns += t.ttot_cpu_ns;
    }
    for (const StackCount& s : part.stacks) stacks[s.stack] += s.count;
  }
  for (auto& [key, r] : regions) {
    // A region seen in only some parts still divides by the whole scope.
    if (const auto f = functions.find(r.scope); f != functions.end()) {
      r.scope_time_ns = f->second.cumtime_ns;
    }
    merged.regions.push_back(std::move(r));
  }
  for (auto& [site, f] : functions) merged.functions.push_back(std::move(f));
  for (auto& [key, t] : threads) merged.threads.push_back(std::move(t));
  for (auto& [stack, count] : stacks) merged.stacks.push_back({stack, count});
  return merged;
}

Profile merge_dumps(std::span<const Dump> dumps) {
  std::vector<Profile> parts;
  parts.reserve(dumps.size());
  for (const Dump& d : dumps) parts.push_back(aggregate(d));
  return merge_profiles(parts);
}

// --- JSON -----------------------------------------------------------------

namespace {

using nlohmann::json;

json site_json(const CodeSite& s) {
  return {{"file", s.file}, {"line", s.line}, {"symbol", s.symbol}, {"kind", to_string(s.kind)}};
}

CodeSite site_from(const json& j) {
  CodeSite s;
  s.file = j.at("file").get<std::string>();
  s.line = j.at("line").get<int>();
  s.symbol = j.at("symbol").get<std::string>();
  auto kind = parse_site_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kParse, "bad site kind in profile");
  s.kind = *kind;
  return s;
}

json tag_json(const std::optional<TimeCategory>& tag) {
  return tag ? json(std::string(to_string(*tag))) : json(nullptr);
}

std::optional<TimeCategory> tag_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  auto tag = parse_time_category(j.get<std::string>());
  if (!tag) throw Error(ErrorCode::kParse, "bad time category in profile");
  return tag;
}

}  // namespace

std::string profile_to_json(const Profile& p) {
  json j;
  j["format"] = "tierprof-profile";
  j["version"] = kProfileFormatVersion;
  j["run_id"] = p.run_id;
  j["scenario_id"] = p.scenario_id;
  j["scale_factor"] = p.scale_factor;
  j["processes"] = json::array();
  for (const ProcessInfo& proc : p.processes) {
    json pj = {{"name", proc.name},
               {"pid", proc.pid},
               {"events", proc.events},
               {"samples", proc.samples},
               {"violations", proc.violations},
               {"samples_partial", proc.samples_partial},
               {"levels", proc.levels},
               {"event_overhead_ns", proc.calibration.event_overhead_ns},
               {"clock_resolution_ns", proc.calibration.clock_resolution_ns}};
    if (proc.coarse) {
      pj["coarse"] = {{"elapsed_s", proc.coarse->elapsed_s},
                      {"user_s", proc.coarse->user_s},
                      {"system_s", proc.coarse->system_s}};
    }
    j["processes"].push_back(std::move(pj));
  }
  j["functions"] = json::array();
  for (const FunctionStats& f : p.functions) {
    j["functions"].push_back({{"site", site_json(f.site)},
                              {"tag", tag_json(f.tag)},
                              {"ncalls_total", f.ncalls_total},
                              {"ncalls_primitive", f.ncalls_primitive},
                              {"tottime_ns", f.tottime_ns},
                              {"cumtime_ns", f.cumtime_ns},
                              {"tottime_cpu_ns", f.tottime_cpu_ns},
                              {"cumtime_cpu_ns", f.cumtime_cpu_ns}});
  }
  j["regions"] = json::array();
  for (const RegionStats& r : p.regions) {
    j["regions"].push_back({{"scope", site_json(r.scope)},
                            {"site", site_json(r.site)},
                            {"tag", tag_json(r.tag)},
                            {"hits", r.hits},
                            {"time_ns", r.time_ns},
                            {"scope_time_ns", r.scope_time_ns}});
  }
  j["threads"] = json::array();
  for (const ThreadStats& t : p.threads) {
    j["threads"].push_back({{"process", t.process},
                            {"thread_id", t.thread_id},
                            {"thread_name", t.thread_name},
                            {"site", site_json(t.site)},
                            {"tag", tag_json(t.tag)},
                            {"ncall_total", t.ncall_total},
                            {"ncall_primitive", t.ncall_primitive},
                            {"tsub_wall_ns", t.tsub_wall_ns},
                            {"ttot_wall_ns", t.ttot_wall_ns},
                            {"tsub_cpu_ns", t.tsub_cpu_ns},
                            {"ttot_cpu_ns", t.ttot_cpu_ns}});
  }
  j["stacks"] = json::array();
  for (const StackCount& s : p.stacks) j["stacks"].push_back({{"stack", s.stack}, {"count", s.count}});
  return j.dump(1) + "\n";
}

Profile profile_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("profile is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "tierprof-profile") throw Error(ErrorCode::kParse, "not a tierprof profile");
    if (j.at("version") != kProfileFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported profile version");
    }
    Profile p;
    p.run_id = j.at("run_id").get<std::string>();
    p.scenario_id = j.at("scenario_id").get<std::string>();
    p.scale_factor = j.at("scale_factor").get<double>();
    for (const json& pj : j.at("processes")) {
      ProcessInfo proc;
      proc.name = pj.at("name").get<std::string>();
      proc.pid = pj.at("pid").get<std::int64_t>();
      proc.events = pj.at("events").get<std::uint64_t>();
      proc.samples = pj.at("samples").get<std::uint64_t>();
      proc.violations = pj.at("violations").get<std::uint64_t>();
      proc.samples_partial = pj.at("samples_partial").get<bool>();
      proc.levels = pj.at("levels").get<std::string>();
      proc.calibration.event_overhead_ns = pj.at("event_overhead_ns").get<std::int64_t>();
      proc.calibration.clock_resolution_ns = pj.at("clock_resolution_ns").get<std::int64_t>();
      if (pj.contains("coarse")) {
        const json& c = pj.at("coarse");
        proc.coarse = make_breakdown(c.at("elapsed_s").get<double>(), c.at("user_s").get<double>(),
                                     c.at("system_s").get<double>());
      }
      p.processes.push_back(std::move(proc));
    }
    for (const json& fj : j.at("functions")) {
      FunctionStats f;
      f.site = site_from(fj.at("site"));
      f.tag = tag_from(fj.at("tag"));
      f.ncalls_total = fj.at("ncalls_total").get<std::uint64_t>();
      f.ncalls_primitive = fj.at("ncalls_primitive").get<std::uint64_t>();
      f.tottime_ns = fj.at("tottime_ns").get<std::int64_t>();
      f.cumtime_ns = fj.at("cumtime_ns").get<std::int64_t>();
      f.tottime_cpu_ns = fj.at("tottime_cpu_ns").get<std::int64_t>();
      f.cumtime_cpu_ns = fj.at("cumtime_cpu_ns").get<std::int64_t>();
      p.functions.push_back(std::move(f));
    }
    for (const json& rj : j.at("regions")) {
      RegionStats r;
      r.scope = site_from(rj.at("scope"));
      r.site = site_from(rj.at("site"));
      r.tag = tag_from(rj.at("tag"));
      r.hits = rj.at("hits").get<std::uint64_t>();
      r.time_ns = rj.at("time_ns").get<std::int64_t>();
      r.scope_time_ns = rj.at("scope_time_ns").get<std::int64_t>();
      p.regions.push_back(std::move(r));
    }
    for (const json& tj : j.at("threads")) {
      ThreadStats t;
      t.process = tj.at("process").get<std::string>();
      t.thread_id = tj.at("thread_id").get<std::uint32_t>();
      t.thread_name = tj.at("thread_name").get<std::string>();
      t.site = site_from(tj.at("site"));
      t.tag = tag_from(tj.at("tag"));
      t.ncall_total = tj.at("ncall_total").get<std::uint64_t>();
      t.ncall_primitive = tj.at("ncall_primitive").get<std::uint64_t>();
      t.tsub_wall_ns = tj.at("tsub_wall_ns").get<std::int64_t>();
      t.ttot_wall_ns = tj.at("ttot_wall_ns").get<std::int64_t>();
      t.tsub_cpu_ns = tj.at("tsub_cpu_ns").get<std::int64_t>();
      t.ttot_cpu_ns = tj.at("ttot_cpu_ns").get<std::int64_t>();
      p.threads.push_back(std::move(t));
    }
    for (const json& sj : j.at("stacks")) {
      p.stacks.push_back({sj.at("stack").get<std::string>(), sj.at("count").get<std::uint64_t>()});
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed profile: ") + e.what());
  }
}

void save_profile(const Profile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << profile_to_json(profile);
}

Profile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return profile_from_json(buffer.str());
}

}  // namespace tierprof
