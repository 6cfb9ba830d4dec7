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

#include "tierprof/reporting.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>

#include "text_util.h"
#include "tierprof/error.h"

namespace tierprof {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "FunctionTable", "LineTable", "ThreadTable", "CoarseTable", "HotspotReport", "CompareReport"};
constexpr std::array<std::string_view, 3> kFormatNames = {"text", "csv", "structured"};

constexpr std::array<std::string_view, 11> kFunctionKeys = {
    "cumulative", "cumtime", "tottime", "time", "ncalls", "calls",
    "pcalls",     "name",    "file",    "line", "stdname"};
constexpr std::array<std::string_view, 3> kLineKeys = {"line", "time", "hits"};
constexpr std::array<std::string_view, 9> kThreadKeys = {
    "ttot", "totaltime", "tsub", "subtime", "ncall", "callcount", "tavg", "avgtime", "name"};
constexpr std::array<std::string_view, 5> kCoarseKeys = {"process", "elapsed", "user", "system",
                                                         "other"};
constexpr std::array<std::string_view, 1> kHotspotKeys = {"share"};
constexpr std::array<std::string_view, 2> kCompareKeys = {"delta", "name"};

// Aliases collapse onto one canonical key.
std::string canonical_key(ReportKind kind, std::string_view key) {
  const auto keys = sort_keys(kind);
  if (key.empty()) return std::string(keys.front());
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    std::string allowed;
    for (std::string_view k : keys) allowed += (allowed.empty() ? "" : ", ") + std::string(k);
    throw Error(ErrorCode::kInvalidSortKey, "'" + std::string(key) + "' is not a sort key for " +
                                                std::string(to_string(kind)) + " (" + allowed +
                                                ")");
  }
  if (kind == ReportKind::kFunctionTable) {
    if (key == "cumtime") return "cumulative";
    if (key == "time") return "tottime";
    if (key == "calls") return "ncalls";
  }
  if (kind == ReportKind::kThreadTable) {
    if (key == "totaltime") return "ttot";
    if (key == "subtime") return "tsub";
    if (key == "callcount") return "ncall";
    if (key == "avgtime") return "tavg";
  }
  return std::string(key);
}

template <typename T>
void truncate(std::vector<T>& rows, const std::optional<std::size_t>& top_n) {
  if (top_n && rows.size() > *top_n) rows.resize(*top_n);
}

std::string tag_text(const std::optional<TimeCategory>& tag) {
  return tag ? std::string(to_string(*tag)) : std::string();
}

std::string pct2(double value) { return fmt::format("{:.2f}", round_half_up(value, 2)); }

std::int64_t as_int(const Cell& c) {
  if (const auto* v = std::get_if<std::int64_t>(&c)) return *v;
  throw Error(ErrorCode::kParse, "report cell is not an integer");
}
double as_double(const Cell& c) {
  if (const auto* v = std::get_if<double>(&c)) return *v;
  if (const auto* v = std::get_if<std::int64_t>(&c)) return static_cast<double>(*v);
  throw Error(ErrorCode::kParse, "report cell is not a number");
}
const std::string& as_str(const Cell& c) {
  if (const auto* v = std::get_if<std::string>(&c)) return *v;
  throw Error(ErrorCode::kParse, "report cell is not a string");
}

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

// Reads a row through column names.
class RowView {
 public:
  RowView(const ReportDocument& doc, const std::vector<Cell>& row) : doc_(doc), row_(row) {}
  std::int64_t i(std::string_view name) const { return as_int(at(name)); }
  double d(std::string_view name) const { return as_double(at(name)); }
  const std::string& s(std::string_view name) const { return as_str(at(name)); }
  CodeSite site(std::string_view prefix = "") const {
    const std::string p(prefix);
    CodeSite site{s(p + "file"), static_cast<int>(i(p + "line")), s(p + "symbol"),
                  SiteKind::kFunction};
    if (doc_.columns.end() != std::find(doc_.columns.begin(), doc_.columns.end(), p + "kind")) {
      site.kind = parse_site_kind(s(p + "kind")).value_or(SiteKind::kFunction);
    }
    return site;
  }

 private:
  const Cell& at(std::string_view name) const {
    const std::size_t c = doc_.column(name);
    if (c >= row_.size()) throw Error(ErrorCode::kParse, "short report row");
    return row_[c];
  }
  const ReportDocument& doc_;
  const std::vector<Cell>& row_;
};

void site_cells(std::vector<Cell>& row, const CodeSite& site) {
  row.emplace_back(site.file);
  row.emplace_back(std::int64_t{site.line});
  row.emplace_back(site.symbol);
  row.emplace_back(std::string(to_string(site.kind)));
}

// ---- FunctionTable -------------------------------------------------------

std::string_view function_ordered_by(std::string_view key) {
  if (key == "cumulative") return "cumulative time";
  if (key == "tottime") return "internal time";
  if (key == "ncalls") return "call count";
  if (key == "pcalls") return "primitive call count";
  if (key == "name") return "function name";
  if (key == "file") return "file name";
  if (key == "line") return "line number";
  return "standard name";
}

ReportDocument function_table(const Profile& p, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kFunctionTable;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  doc.meta = {{"total_calls", i64(p.total_calls())},
              {"primitive_calls", i64(p.total_primitive_calls())},
              {"total_ns", p.total_tottime_ns()},
              {"ordered_by", std::string(function_ordered_by(doc.sort_key))}};
  doc.columns = {"file",        "line",        "symbol",     "kind",       "tag",
                 "ncalls_total", "ncalls_primitive", "tottime_ns", "cumtime_ns",
                 "tottime_cpu_ns", "cumtime_cpu_ns"};

  std::vector<const FunctionStats*> rows;
  for (const FunctionStats& f : p.functions) rows.push_back(&f);
  const std::string& key = doc.sort_key;
  std::function<bool(const FunctionStats*, const FunctionStats*)> less;
  if (key == "cumulative") {
    less = [](auto a, auto b) { return a->cumtime_ns > b->cumtime_ns; };
  } else if (key == "tottime") {
    less = [](auto a, auto b) { return a->tottime_ns > b->tottime_ns; };
  } else if (key == "ncalls") {
    less = [](auto a, auto b) { return a->ncalls_total > b->ncalls_total; };
  } else if (key == "pcalls") {
    less = [](auto a, auto b) { return a->ncalls_primitive > b->ncalls_primitive; };
  } else if (key == "name") {
    less = [](auto a, auto b) { return a->site.symbol < b->site.symbol; };
  } else if (key == "file") {
    less = [](auto a, auto b) { return a->site.file < b->site.file; };
  } else if (key == "line") {
    less = [](auto a, auto b) { return a->site.line < b->site.line; };
  } else {
    less = [](auto a, auto b) { return site_label(a->site) < site_label(b->site); };
  }
  std::stable_sort(rows.begin(), rows.end(), less);
  truncate(rows, spec.top_n);

  for (const FunctionStats* f : rows) {
    std::vector<Cell> row;
    site_cells(row, f->site);
    row.emplace_back(tag_text(f->tag));
    row.emplace_back(i64(f->ncalls_total));
    row.emplace_back(i64(f->ncalls_primitive));
    row.emplace_back(f->tottime_ns);
    row.emplace_back(f->cumtime_ns);
    row.emplace_back(f->tottime_cpu_ns);
    row.emplace_back(f->cumtime_cpu_ns);
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

constexpr std::string_view kPstatsHeader =
    "   ncalls  tottime  percall  cumtime  percall filename:lineno(function)";

std::string pstats_row(const CodeSite& site, std::int64_t ncalls, std::int64_t pcalls,
                       std::int64_t tottime_ns, std::int64_t cumtime_ns) {
  const std::string calls =
      ncalls == pcalls ? std::to_string(ncalls) : fmt::format("{}/{}", ncalls, pcalls);
  const double tt = to_seconds(tottime_ns);
  const double ct = to_seconds(cumtime_ns);
  const std::string per_tot =
      ncalls ? fmt::format("{:8.3f}", tt / static_cast<double>(ncalls)) : std::string(8, ' ');
  const std::string per_cum =
      pcalls ? fmt::format("{:8.3f}", ct / static_cast<double>(pcalls)) : std::string(8, ' ');
  return fmt::format("{:>9} {:8.3f} {} {:8.3f} {} {}\n", calls, tt, per_tot, ct, per_cum,
                     site_label(site));
}

std::string function_text(const ReportDocument& doc) {
  const std::int64_t calls = as_int(doc.meta_value("total_calls"));
  const std::int64_t primitive = as_int(doc.meta_value("primitive_calls"));
  std::string out = fmt::format("{} function calls", calls);
  if (calls != primitive) out += fmt::format(" ({} primitive calls)", primitive);
  out += fmt::format(" in {:.3f} seconds\n\n", to_seconds(as_int(doc.meta_value("total_ns"))));
  out += fmt::format("Ordered by: {}\n\n", as_str(doc.meta_value("ordered_by")));
  out += kPstatsHeader;
  out += '\n';
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    out += pstats_row(v.site(), v.i("ncalls_total"), v.i("ncalls_primitive"), v.i("tottime_ns"),
                      v.i("cumtime_ns"));
  }
  return out;
}

// ---- LineTable ------------------------------------------------------------

ReportDocument line_table(const Profile& p, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kLineTable;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  doc.meta = {{"timer_unit", 1e-6}};
  doc.columns = {"scope_file", "scope_line", "scope_symbol", "scope_kind", "file",
                 "line",       "symbol",     "kind",         "tag",        "hits",
                 "time_ns",    "scope_time_ns"};

  std::vector<RegionStats> regions =
      spec.function_scope.empty() ? p.regions : p.regions_in(spec.function_scope);
  std::stable_sort(regions.begin(), regions.end(),
                   [](const auto& a, const auto& b) { return a.scope < b.scope; });
  const std::string& key = doc.sort_key;
  auto begin = regions.begin();
  while (begin != regions.end()) {
    auto end = std::find_if(begin, regions.end(),
                            [&](const RegionStats& r) { return !(r.scope == begin->scope); });
    std::vector<const RegionStats*> block;
    for (auto it = begin; it != end; ++it) block.push_back(&*it);
    std::stable_sort(block.begin(), block.end(), [&](const auto* a, const auto* b) {
      if (key == "time") return a->time_ns > b->time_ns;
      if (key == "hits") return a->hits > b->hits;
      return a->site.line < b->site.line;
    });
    truncate(block, spec.top_n);
    for (const RegionStats* r : block) {
      std::vector<Cell> row;
      site_cells(row, r->scope);
      site_cells(row, r->site);
      row.emplace_back(tag_text(r->tag));
      row.emplace_back(i64(r->hits));
      row.emplace_back(r->time_ns);
      row.emplace_back(r->scope_time_ns);
      doc.rows.push_back(std::move(row));
    }
    begin = end;
  }
  return doc;
}

constexpr std::string_view kLineRowFormat = "{:>6} {:>9} {:>12} {:>8} {:>8}  {}\n";

std::string line_text(const ReportDocument& doc) {
  std::string out = fmt::format("Timer unit: {:g} s\n\n", as_double(doc.meta_value("timer_unit")));
  const std::string header =
      fmt::format(kLineRowFormat, "Line #", "Hits", "Time", "Per Hit", "% Time", "Line Contents");
  std::optional<CodeSite> scope;
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    const CodeSite row_scope = v.site("scope_");
    if (!scope || !(*scope == row_scope)) {
      if (scope) out += '\n';
      scope = row_scope;
      out += fmt::format("Total time: {:g} s\n", to_seconds(v.i("scope_time_ns")));
      out += fmt::format("File: {}\n", row_scope.file);
      out += fmt::format("Function: {} at line {}\n\n", row_scope.symbol, row_scope.line);
      out += header;
      out += std::string(header.size() - 1, '=');
      out += '\n';
    }
    const std::int64_t hits = v.i("hits");
    const std::int64_t time_ns = v.i("time_ns");
    const std::int64_t scope_ns = v.i("scope_time_ns");
    const double time_us = static_cast<double>(time_ns) / 1e3;
    const std::string per_hit =
        hits ? fmt::format("{:5.1f}", time_us / static_cast<double>(hits)) : std::string();
    const double pct =
        scope_ns > 0 ? 100.0 * static_cast<double>(time_ns) / static_cast<double>(scope_ns) : 0.0;
    out += fmt::format(kLineRowFormat, v.i("line"), hits, std::llround(time_us), per_hit,
                       fmt::format("{:5.1f}", pct), v.s("symbol"));
  }
  return out;
}

// ---- ThreadTable ----------------------------------------------------------

std::string_view thread_ordered_by(std::string_view key) {
  if (key == "ttot") return "totaltime, desc";
  if (key == "tsub") return "subtime, desc";
  if (key == "ncall") return "callcount, desc";
  if (key == "tavg") return "avgtime, desc";
  return "name, asc";
}

ReportDocument thread_table(const Profile& p, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kThreadTable;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  doc.meta = {{"clock", std::string(to_string(spec.clock))},
              {"ordered_by", std::string(thread_ordered_by(doc.sort_key))}};
  doc.columns = {"process", "thread_id",    "thread_name", "file",         "line",
                 "symbol",  "kind",         "tag",         "ncall_total",  "ncall_primitive",
                 "tsub_wall_ns", "ttot_wall_ns", "tsub_cpu_ns", "ttot_cpu_ns"};

  std::vector<const ThreadStats*> rows;
  for (const ThreadStats& t : p.threads) rows.push_back(&t);
  const std::string& key = doc.sort_key;
  const ClockType clock = spec.clock;
  std::stable_sort(rows.begin(), rows.end(), [&](const auto* a, const auto* b) {
    if (key == "tsub") return a->tsub_ns(clock) > b->tsub_ns(clock);
    if (key == "ncall") return a->ncall_total > b->ncall_total;
    if (key == "tavg") return a->tavg_s(clock) > b->tavg_s(clock);
    if (key == "name") return site_short_label(a->site) < site_short_label(b->site);
    return a->ttot_ns(clock) > b->ttot_ns(clock);
  });
  truncate(rows, spec.top_n);
  for (const ThreadStats* t : rows) {
    std::vector<Cell> row;
    row.emplace_back(t->process);
    row.emplace_back(std::int64_t{t->thread_id});
    row.emplace_back(t->thread_name);
    site_cells(row, t->site);
    row.emplace_back(tag_text(t->tag));
    row.emplace_back(i64(t->ncall_total));
    row.emplace_back(i64(t->ncall_primitive));
    row.emplace_back(t->tsub_wall_ns);
    row.emplace_back(t->ttot_wall_ns);
    row.emplace_back(t->tsub_cpu_ns);
    row.emplace_back(t->ttot_cpu_ns);
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

constexpr std::size_t kThreadNameWidth = 36;

// Long names keep their tail, as the interesting part is "file:line symbol".
std::string thread_row_name(const std::string& name) {
  if (name.size() <= kThreadNameWidth) return name;
  return ".." + name.substr(name.size() - (kThreadNameWidth - 2));
}

std::string thread_text(const ReportDocument& doc) {
  const bool cpu = as_str(doc.meta_value("clock")) == "CPU";
  std::string out = fmt::format("Clock type: {}\nOrdered by: {}\n\n", as_str(doc.meta_value("clock")),
                                as_str(doc.meta_value("ordered_by")));
  const std::string header = "name                                ncall  tsub    ttot    tavg\n";

  // Rows stay in sorted order; threads are listed in order of first appearance.
  std::vector<std::pair<std::string, std::int64_t>> threads;
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    std::pair<std::string, std::int64_t> id{v.s("process"), v.i("thread_id")};
    if (std::find(threads.begin(), threads.end(), id) == threads.end()) threads.push_back(id);
  }
  if (threads.empty()) out += header;
  for (std::size_t ti = 0; ti < threads.size(); ++ti) {
    bool first = true;
    for (const auto& r : doc.rows) {
      RowView v(doc, r);
      if (v.s("process") != threads[ti].first || v.i("thread_id") != threads[ti].second) continue;
      if (first) {
        if (ti > 0) out += '\n';
        if (threads.size() > 1) {
          out += fmt::format("Thread: {}/{} (id {})\n", v.s("process"), v.s("thread_name"),
                             v.i("thread_id"));
        }
        out += header;
        first = false;
      }
      const std::int64_t total = v.i("ncall_total");
      const std::int64_t primitive = v.i("ncall_primitive");
      const std::string calls =
          total == primitive ? std::to_string(total) : fmt::format("{}/{}", total, primitive);
      const double tsub = to_seconds(v.i(cpu ? "tsub_cpu_ns" : "tsub_wall_ns"));
      const double ttot = to_seconds(v.i(cpu ? "ttot_cpu_ns" : "ttot_wall_ns"));
      const double tavg = total ? ttot / static_cast<double>(total) : 0.0;
      out += fmt::format("{:<36} {:<6} {:.6f} {:.6f} {:.6f}\n",
                         thread_row_name(site_short_label(v.site())), calls, tsub, ttot, tavg);
    }
  }
  return out;
}

// ---- CoarseTable ----------------------------------------------------------

ReportDocument coarse_table(const Profile& p, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kCoarseTable;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  doc.columns = {"process", "pid", "elapsed_s", "user_s", "system_s", "other_s", "oversubscribed"};
  std::vector<const ProcessInfo*> rows;
  for (const ProcessInfo& proc : p.processes) {
    if (proc.coarse) rows.push_back(&proc);
  }
  const std::string& key = doc.sort_key;
  std::stable_sort(rows.begin(), rows.end(), [&](const auto* a, const auto* b) {
    if (key == "elapsed") return a->coarse->elapsed_s > b->coarse->elapsed_s;
    if (key == "user") return a->coarse->user_s > b->coarse->user_s;
    if (key == "system") return a->coarse->system_s > b->coarse->system_s;
    if (key == "other") return a->coarse->other_s > b->coarse->other_s;
    return false;
  });
  truncate(rows, spec.top_n);
  for (const ProcessInfo* proc : rows) {
    const CoarseBreakdown& c = *proc->coarse;
    doc.rows.push_back({proc->name, proc->pid, c.elapsed_s, c.user_s, c.system_s, c.other_s,
                        std::int64_t{c.oversubscribed ? 1 : 0}});
  }
  return doc;
}

constexpr std::string_view kCoarseRowFormat = "{:<24}{:>12}{:>14}{:>12}{:>10}{:>10}{:>11}\n";

std::string coarse_text(const ReportDocument& doc) {
  std::string out = fmt::format(kCoarseRowFormat, "Process", "User Space", "System Calls",
                                "Run Time", "User (%)", "Sys (%)", "Other (%)");
  double elapsed = 0, user = 0, sys = 0, other = 0;
  bool any_over = false;
  auto line = [&](const std::string& name, double e, double u, double s, double o) {
    const bool usable = e > 0;
    const CoarsePercentages pct =
        usable ? coarse_percentages({e, u, s, o, false}) : CoarsePercentages{};
    out += fmt::format(kCoarseRowFormat, name, fmt::format("{:.3f}", u), fmt::format("{:.3f}", s),
                       fmt::format("{:.3f}", e), usable ? pct2(pct.user_pct) : "-",
                       usable ? pct2(pct.sys_pct) : "-", usable ? pct2(pct.other_pct) : "-");
  };
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    const bool over = v.i("oversubscribed") != 0;
    any_over = any_over || over;
    line(v.s("process") + (over ? "*" : ""), v.d("elapsed_s"), v.d("user_s"), v.d("system_s"),
         v.d("other_s"));
    elapsed += v.d("elapsed_s");
    user += v.d("user_s");
    sys += v.d("system_s");
    other += v.d("other_s");
  }
  if (doc.rows.size() > 1) line("Total", elapsed, user, sys, other);
  if (any_over) out += "* user + system CPU exceeded run time (several threads on CPU)\n";
  return out;
}

// ---- HotspotReport --------------------------------------------------------

ReportDocument hotspot_report(std::span<const HotspotFinding> findings, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kHotspotReport;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  const std::size_t count =
      spec.top_n ? std::min(*spec.top_n, findings.size()) : findings.size();
  doc.meta = {{"threshold_pct", spec.threshold_pct}, {"findings", static_cast<std::int64_t>(count)}};
  doc.columns = {"row",  "rank", "category",     "share_pct",        "remediation",
                 "file", "line", "symbol",       "kind",             "ncalls_total",
                 "ncalls_primitive", "tottime_ns", "cumtime_ns", "recommendation"};
  for (std::size_t i = 0; i < count; ++i) {
    const HotspotFinding& f = findings[i];
    const auto rank = static_cast<std::int64_t>(i + 1);
    std::vector<Cell> row{std::string("finding"), rank, std::string(to_string(f.category)),
                          f.share_pct, std::int64_t{f.remediation}};
    site_cells(row, f.site);
    row.insert(row.end(), {std::int64_t{0}, std::int64_t{0}, std::int64_t{0}, std::int64_t{0},
                           f.recommendation});
    doc.rows.push_back(std::move(row));
    for (const FunctionStats& e : f.evidence) {
      std::vector<Cell> ev{std::string("evidence"), rank, std::string(to_string(f.category)), 0.0,
                           std::int64_t{f.remediation}};
      site_cells(ev, e.site);
      ev.insert(ev.end(), {i64(e.ncalls_total), i64(e.ncalls_primitive), e.tottime_ns,
                           e.cumtime_ns, std::string()});
      doc.rows.push_back(std::move(ev));
    }
  }
  return doc;
}

std::string hotspot_text(const ReportDocument& doc) {
  const double threshold = as_double(doc.meta_value("threshold_pct"));
  const std::int64_t count = as_int(doc.meta_value("findings"));
  std::string out;
  if (count == 0) {
    return fmt::format("No hotspots at or above {}% of attributed time\n", pct2(threshold));
  }
  out += fmt::format("Hotspots at or above {}% of attributed time: {}\n", pct2(threshold), count);
  bool evidence_header = false;
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    if (v.s("row") == "finding") {
      out += fmt::format("\n{}. {} {}% dominated by {}\n", v.i("rank"), v.s("category"),
                         pct2(v.d("share_pct")), site_label(v.site()));
      const std::int64_t remediation = v.i("remediation");
      if (remediation > 0) {
        out += fmt::format("   Remediation {}: {}\n", remediation, v.s("recommendation"));
      } else {
        out += fmt::format("   Note: {}\n", v.s("recommendation"));
      }
      evidence_header = false;
      continue;
    }
    if (!evidence_header) {
      out += kPstatsHeader;
      out += '\n';
      evidence_header = true;
    }
    out += pstats_row(v.site(), v.i("ncalls_total"), v.i("ncalls_primitive"), v.i("tottime_ns"),
                      v.i("cumtime_ns"));
  }
  return out;
}

// ---- CompareReport --------------------------------------------------------

ReportDocument compare_report(const CompareReport& report, const ReportSpec& spec) {
  ReportDocument doc;
  doc.kind = ReportKind::kCompareReport;
  doc.sort_key = canonical_key(doc.kind, spec.sort_key);
  std::string regressions;
  for (TimeCategory c : report.regressions) {
    regressions += (regressions.empty() ? "" : ",") + std::string(to_string(c));
  }
  doc.meta = {{"scenario_id", report.scenario_id}, {"scale_factor", report.scale_factor},
              {"before_run", report.before_run},   {"after_run", report.after_run},
              {"epsilon_s", report.epsilon_s},     {"regressions", regressions}};
  doc.columns = {"row",           "name",           "file",           "line",
                 "symbol",        "kind",           "before_ncalls",  "after_ncalls",
                 "before_tottime_ns", "after_tottime_ns", "before_ns", "after_ns",
                 "before_pct",    "after_pct",      "regression"};
  for (const CategoryDelta& d : report.categories) {
    doc.rows.push_back({std::string("category"), std::string(to_string(d.category)),
                        std::string(), std::int64_t{0}, std::string(), std::string(),
                        std::int64_t{0}, std::int64_t{0}, std::int64_t{0}, std::int64_t{0},
                        d.before_ns, d.after_ns, d.before_pct, d.after_pct,
                        std::int64_t{d.regression ? 1 : 0}});
  }
  std::vector<const SiteDelta*> sites;
  for (const SiteDelta& s : report.sites) sites.push_back(&s);
  if (doc.sort_key == "name") {
    std::stable_sort(sites.begin(), sites.end(), [](const auto* a, const auto* b) {
      return site_label(a->site) < site_label(b->site);
    });
  } else {
    std::stable_sort(sites.begin(), sites.end(), [](const auto* a, const auto* b) {
      return std::llabs(a->cumtime_delta_ns()) > std::llabs(b->cumtime_delta_ns());
    });
  }
  truncate(sites, spec.top_n);
  for (const SiteDelta* s : sites) {
    std::vector<Cell> row{std::string("site"), site_label(s->site)};
    site_cells(row, s->site);
    row.insert(row.end(), {i64(s->ncalls_before), i64(s->ncalls_after), s->tottime_before_ns,
                           s->tottime_after_ns, s->cumtime_before_ns, s->cumtime_after_ns, 0.0,
                           0.0, std::int64_t{0}});
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

std::string signed_seconds(std::int64_t ns) { return fmt::format("{:+.3f}", to_seconds(ns)); }

std::string compare_text(const ReportDocument& doc) {
  std::string out = fmt::format(
      "Scenario: {} (scale {:g})\nBefore: {}\nAfter: {}\nRegression threshold: {:.3f} s\n\n",
      as_str(doc.meta_value("scenario_id")), as_double(doc.meta_value("scale_factor")),
      as_str(doc.meta_value("before_run")), as_str(doc.meta_value("after_run")),
      as_double(doc.meta_value("epsilon_s")));
  constexpr std::string_view kCategoryFormat = "{:<14}{:>12}{:>12}{:>12}{:>11}{:>11}  {}\n";
  out += fmt::format(kCategoryFormat, "Category", "Before (s)", "After (s)", "Delta (s)",
                     "Before (%)", "After (%)", "");
  bool site_header = false;
  for (const auto& r : doc.rows) {
    RowView v(doc, r);
    const std::int64_t before = v.i("before_ns");
    const std::int64_t after = v.i("after_ns");
    if (v.s("row") == "category") {
      out += fmt::format(kCategoryFormat, v.s("name"), fmt::format("{:.3f}", to_seconds(before)),
                         fmt::format("{:.3f}", to_seconds(after)), signed_seconds(after - before),
                         pct2(v.d("before_pct")), pct2(v.d("after_pct")),
                         v.i("regression") ? "REGRESSION" : "");
      continue;
    }
    if (!site_header) {
      const std::string& regressions = as_str(doc.meta_value("regressions"));
      out += fmt::format("\nRegressions: {}\n\n", regressions.empty() ? "none" : regressions);
      out += fmt::format("{:>15} {:>12} {:>12} {:>12} {:>10} {}\n", "ncalls", "cumtime(b)",
                         "cumtime(a)", "delta", "change(%)", "filename:lineno(function)");
      site_header = true;
    }
    const std::string calls = fmt::format("{}>{}", v.i("before_ncalls"), v.i("after_ncalls"));
    const double change =
        before == 0 ? (after == 0 ? 0.0 : 100.0)
                    : 100.0 * static_cast<double>(after - before) / static_cast<double>(before);
    out += fmt::format("{:>15} {:>12.3f} {:>12.3f} {:>12} {:>10} {}\n", calls, to_seconds(before),
                       to_seconds(after), signed_seconds(after - before), pct2(change),
                       site_label(v.site()));
  }
  if (!site_header) {
    const std::string& regressions = as_str(doc.meta_value("regressions"));
    out += fmt::format("\nRegressions: {}\n", regressions.empty() ? "none" : regressions);
  }
  return out;
}

// ---- csv / structured -----------------------------------------------------

std::string csv_field(std::string_view text) {
  const bool quote = text.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!text.empty() && (text.front() == ' ' || text.back() == ' '));
  if (!quote) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_csv(const Cell& c) {
  if (const auto* v = std::get_if<std::int64_t>(&c)) return std::to_string(*v);
  if (const auto* v = std::get_if<double>(&c)) return detail::format_double(*v);
  return csv_field(std::get<std::string>(c));
}

std::string csv_text(const ReportDocument& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(doc.columns[i]);
  }
  out += "\r\n";
  for (const auto& row : doc.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += cell_csv(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

using ojson = nlohmann::ordered_json;

ojson cell_json(const Cell& c) {
  if (const auto* v = std::get_if<std::int64_t>(&c)) return *v;
  if (const auto* v = std::get_if<double>(&c)) return *v;
  return std::get<std::string>(c);
}

Cell cell_from(const ojson& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::kParse, "unsupported report cell");
}

std::string structured_text(const ReportDocument& doc) {
  ojson j;
  j["format"] = "tierprof-report";
  j["version"] = kReportFormatVersion;
  j["kind"] = to_string(doc.kind);
  j["sort"] = doc.sort_key;
  j["meta"] = ojson::object();
  for (const auto& [key, value] : doc.meta) j["meta"][key] = cell_json(value);
  j["columns"] = doc.columns;
  j["rows"] = ojson::array();
  for (const auto& row : doc.rows) {
    ojson r = ojson::array();
    for (const Cell& c : row) r.push_back(cell_json(c));
    j["rows"].push_back(std::move(r));
  }
  return j.dump(1) + "\n";
}

}  // namespace

std::string_view to_string(ReportKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ReportKind> parse_report_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ReportKind>(i);
  }
  // Short forms for the command line.
  if (text == "function") return ReportKind::kFunctionTable;
  if (text == "line") return ReportKind::kLineTable;
  if (text == "thread") return ReportKind::kThreadTable;
  if (text == "coarse") return ReportKind::kCoarseTable;
  if (text == "hotspot") return ReportKind::kHotspotReport;
  if (text == "compare") return ReportKind::kCompareReport;
  return std::nullopt;
}

std::string_view to_string(ReportFormat format) {
  return kFormatNames[static_cast<std::size_t>(format)];
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  for (std::size_t i = 0; i < kFormatNames.size(); ++i) {
    if (kFormatNames[i] == text) return static_cast<ReportFormat>(i);
  }
  if (text == "json") return ReportFormat::kStructured;
  return std::nullopt;
}

std::span<const std::string_view> sort_keys(ReportKind kind) {
  switch (kind) {
    case ReportKind::kFunctionTable: return kFunctionKeys;
    case ReportKind::kLineTable: return kLineKeys;
    case ReportKind::kThreadTable: return kThreadKeys;
    case ReportKind::kCoarseTable: return kCoarseKeys;
    case ReportKind::kHotspotReport: return kHotspotKeys;
    case ReportKind::kCompareReport: return kCompareKeys;
  }
  return {};
}

std::size_t ReportDocument::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::kParse, "missing column " + std::string(name));
  return static_cast<std::size_t>(it - columns.begin());
}

const Cell& ReportDocument::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw Error(ErrorCode::kParse, "missing report field " + std::string(key));
}

ReportDocument build_document(const Profile& profile, const ReportSpec& spec) {
  switch (spec.kind) {
    case ReportKind::kFunctionTable: return function_table(profile, spec);
    case ReportKind::kLineTable: return line_table(profile, spec);
    case ReportKind::kThreadTable: return thread_table(profile, spec);
    case ReportKind::kCoarseTable: return coarse_table(profile, spec);
    default: break;
  }
  throw Error(ErrorCode::kConfig,
              std::string(to_string(spec.kind)) + " is not rendered from a profile");
}

ReportDocument build_document(std::span<const HotspotFinding> findings, const ReportSpec& spec) {
  if (spec.kind != ReportKind::kHotspotReport) {
    throw Error(ErrorCode::kConfig, "findings render only as HotspotReport");
  }
  return hotspot_report(findings, spec);
}

ReportDocument build_document(const CompareReport& report, const ReportSpec& spec) {
  if (spec.kind != ReportKind::kCompareReport) {
    throw Error(ErrorCode::kConfig, "comparisons render only as CompareReport");
  }
  return compare_report(report, spec);
}

std::string format_document(const ReportDocument& doc, ReportFormat format) {
  if (format == ReportFormat::kCsv) return csv_text(doc);
  if (format == ReportFormat::kStructured) return structured_text(doc);
  switch (doc.kind) {
    case ReportKind::kFunctionTable: return function_text(doc);
    case ReportKind::kLineTable: return line_text(doc);
    case ReportKind::kThreadTable: return thread_text(doc);
    case ReportKind::kCoarseTable: return coarse_text(doc);
    case ReportKind::kHotspotReport: return hotspot_text(doc);
    case ReportKind::kCompareReport: return compare_text(doc);
  }
  return {};
}

ReportDocument parse_structured(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
  try {
    if (j.at("format") != "tierprof-report") {
      throw Error(ErrorCode::kParse, "not a tierprof report");
    }
    if (j.at("version").get<int>() != kReportFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported report version");
    }
    ReportDocument doc;
    const auto kind = parse_report_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kParse, "unknown report kind");
    doc.kind = *kind;
    doc.sort_key = j.at("sort").get<std::string>();
    for (const auto& [key, value] : j.at("meta").items()) doc.meta.emplace_back(key, cell_from(value));
    doc.columns = j.at("columns").get<std::vector<std::string>>();
    for (const ojson& r : j.at("rows")) {
      std::vector<Cell> row;
      for (const ojson& c : r) row.push_back(cell_from(c));
      if (row.size() != doc.columns.size()) throw Error(ErrorCode::kParse, "ragged report row");
      doc.rows.push_back(std::move(row));
    }
    return doc;
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        field += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else {
        quoted = false;
      }
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_field();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParse, "unterminated quoted csv field");
  if (field_started || !field.empty() || !row.empty()) {
    end_field();
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit(std::string_view document, const ReportSpec& spec) {
  if (!spec.output) {
    std::cout << document;
    std::cout.flush();
    return;
  }
  const std::filesystem::path& path = *spec.output;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << document;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string render_summary(const RunSummary& run) {
  std::string out = fmt::format("run_id: {}\nscenario: {}\nscale_factor: {:g}\nlevels: {}\nseed: {}\n",
                                run.run_id, run.scenario_id, run.scale_factor, run.levels, run.seed);
  out += "\nBootstrap timeline (s since manager start)\n";
  for (const auto& [phase, t] : run.timeline) out += fmt::format("  {:<22}{:>10.3f}\n", phase, t);
  out += "\nEntities\n";
  out += fmt::format("  {:<20}{:<18}{:>8}{:>6}{:>11}{:>10}{:>10}\n", "name", "role", "pid", "exit",
                     "elapsed(s)", "user(s)", "sys(s)");
  for (const EntitySummary& e : run.entities) {
    const std::string elapsed = e.coarse ? fmt::format("{:.3f}", e.coarse->elapsed_s) : "-";
    const std::string user = e.coarse ? fmt::format("{:.3f}", e.coarse->user_s) : "-";
    const std::string sys = e.coarse ? fmt::format("{:.3f}", e.coarse->system_s) : "-";
    out += fmt::format("  {:<20}{:<18}{:>8}{:>6}{:>11}{:>10}{:>10}\n", e.name, e.role, e.pid,
                       e.exit_status, elapsed, user, sys);
  }
  if (!run.facts.empty()) {
    out += "\nCounters\n";
    for (const auto& [key, value] : run.facts) out += fmt::format("  {:<28}{}\n", key, value);
  }
  return out;
}

std::filesystem::path write_dump_index(const std::filesystem::path& dir) {
  std::error_code ec;
  std::vector<std::filesystem::path> dumps;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dump") dumps.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(dumps.begin(), dumps.end());

  std::string out = "file\tprocess\tpid\trun_id\tscenario_id\tlevels\tevents\tsamples\tviolations\n";
  for (const auto& path : dumps) {
    const Dump dump = load_dump(path);
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", path.filename().string(),
                       detail::escape_field(dump.header.process), dump.header.pid,
                       detail::escape_field(dump.header.run_id),
                       detail::escape_field(dump.header.scenario_id), dump.header.levels,
                       dump.events.size(), dump.samples.size(), dump.violations.size());
  }
  const std::filesystem::path index = dir / "index.tsv";
  std::ofstream file(index, std::ios::binary | std::ios::trunc);
  file << out;
  if (!file) throw Error(ErrorCode::kIo, "cannot write " + index.string());
  return index;
}

}  // namespace tierprof
