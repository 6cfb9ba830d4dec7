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

#include "tierprof/dump.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "text_util.h"
#include "tierprof/error.h"

namespace tierprof {
namespace {

using detail::escape_field;
using detail::format_double;
using detail::parse_number;
using detail::unescape_field;

std::string tag_field(const std::optional<TimeCategory>& tag) {
  return tag ? std::string(to_string(*tag)) : "-";
}

std::optional<TimeCategory> parse_tag_field(std::string_view text) {
  if (text == "-") return std::nullopt;
  auto tag = parse_time_category(text);
  if (!tag) throw Error(ErrorCode::kParse, "unknown time category '" + std::string(text) + "'");
  return tag;
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n, std::size_t line_no) {
  if (fields.size() != n) {
    throw Error(ErrorCode::kParse, "dump line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(n) + " fields, got " +
                                       std::to_string(fields.size()));
  }
}

}  // namespace

void write_dump(const Dump& dump, std::ostream& out) {
  const DumpHeader& h = dump.header;
  out << "tierprof-dump\t" << kDumpFormatVersion << '\n';
  out << "run_id\t" << escape_field(h.run_id) << '\n';
  out << "scenario_id\t" << escape_field(h.scenario_id) << '\n';
  out << "process\t" << escape_field(h.process) << '\n';
  out << "pid\t" << h.pid << '\n';
  out << "scale_factor\t" << format_double(h.scale_factor) << '\n';
  out << "event_overhead_ns\t" << h.calibration.event_overhead_ns << '\n';
  out << "clock_resolution_ns\t" << h.calibration.clock_resolution_ns << '\n';
  out << "levels\t" << escape_field(h.levels) << '\n';
  out << "samples_partial\t" << (h.samples_partial ? 1 : 0) << '\n';
  if (h.coarse) {
    out << "coarse\t" << format_double(h.coarse->elapsed_s) << '\t'
        << format_double(h.coarse->user_s) << '\t' << format_double(h.coarse->system_s) << '\n';
  }
  for (std::size_t id = 0; id < dump.sites.size(); ++id) {
    const SiteRecord& s = dump.sites[id];
    out << "site\t" << id << '\t' << to_string(s.site.kind) << '\t' << tag_field(s.tag) << '\t'
        << s.site.line << '\t' << escape_field(s.site.file) << '\t' << escape_field(s.site.symbol)
        << '\n';
  }
  for (const ThreadRecord& t : dump.threads) {
    out << "thread\t" << t.thread_id << '\t' << t.os_tid << '\t' << escape_field(t.name) << '\n';
  }
  for (const ProfileEvent& e : dump.events) {
    out << (e.kind == EventKind::kEnter ? 'E' : 'X') << '\t' << e.thread_id << '\t' << e.site
        << '\t' << e.wall_ns << '\t' << e.cpu_ns << '\n';
  }
  for (const StackSample& s : dump.samples) {
    out << "S\t" << s.thread_id << '\t' << s.wall_ns << '\t' << s.cpu_ns << '\t';
    for (std::size_t i = 0; i < s.stack.size(); ++i) {
      if (i) out << ',';
      out << s.stack[i];
    }
    out << '\n';
  }
  for (const NestingViolation& v : dump.violations) {
    out << "V\t" << v.thread_id << '\t' << v.site << '\t' << v.wall_ns << '\n';
  }
  out << "end\t" << dump.events.size() << '\n';
}

Dump read_dump(std::istream& in) {
  Dump dump;
  std::string line;
  std::size_t line_no = 0;
  bool saw_magic = false;
  bool saw_end = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split(line, '\t');
    const std::string_view key = f[0];
    if (!saw_magic) {
      if (key != "tierprof-dump" || f.size() != 2) {
        throw Error(ErrorCode::kParse, "not a tierprof dump (missing magic line)");
      }
      const int version = parse_number<int>(f[1], "dump version");
      if (version != kDumpFormatVersion) {
        throw Error(ErrorCode::kParse, "unsupported dump version " + std::to_string(version));
      }
      saw_magic = true;
      continue;
    }
    DumpHeader& h = dump.header;
    if (key == "E" || key == "X") {
      expect_fields(f, 5, line_no);
      ProfileEvent e;
      e.kind = key == "E" ? EventKind::kEnter : EventKind::kExit;
      e.thread_id = parse_number<std::uint32_t>(f[1], "thread id");
      e.site = parse_number<SiteId>(f[2], "site id");
      if (e.site >= dump.sites.size()) {
        throw Error(ErrorCode::kParse, "event references unknown site " + std::to_string(e.site));
      }
      e.tag = dump.sites[e.site].tag;
      e.wall_ns = parse_number<std::int64_t>(f[3], "wall_ns");
      e.cpu_ns = parse_number<std::int64_t>(f[4], "cpu_ns");
      dump.events.push_back(e);
    } else if (key == "S") {
      expect_fields(f, 5, line_no);
      StackSample s;
      s.thread_id = parse_number<std::uint32_t>(f[1], "thread id");
      s.wall_ns = parse_number<std::int64_t>(f[2], "wall_ns");
      s.cpu_ns = parse_number<std::int64_t>(f[3], "cpu_ns");
      if (!f[4].empty()) {
        for (auto id : detail::split(f[4], ',')) s.stack.push_back(parse_number<SiteId>(id, "site id"));
      }
      dump.samples.push_back(std::move(s));
    } else if (key == "V") {
      expect_fields(f, 4, line_no);
      dump.violations.push_back({parse_number<std::uint32_t>(f[1], "thread id"),
                                 parse_number<SiteId>(f[2], "site id"),
                                 parse_number<std::int64_t>(f[3], "wall_ns")});
    } else if (key == "site") {
      expect_fields(f, 7, line_no);
      const auto id = parse_number<SiteId>(f[1], "site id");
      if (id != dump.sites.size()) throw Error(ErrorCode::kParse, "site ids must be dense and ordered");
      auto kind = parse_site_kind(f[2]);
      if (!kind) throw Error(ErrorCode::kParse, "unknown site kind '" + std::string(f[2]) + "'");
      SiteRecord s;
      s.site.kind = *kind;
      s.tag = parse_tag_field(f[3]);
      s.site.line = parse_number<int>(f[4], "line");
      s.site.file = unescape_field(f[5]);
      s.site.symbol = unescape_field(f[6]);
      dump.sites.push_back(std::move(s));
    } else if (key == "thread") {
      expect_fields(f, 4, line_no);
      dump.threads.push_back({parse_number<std::uint32_t>(f[1], "thread id"),
                              parse_number<std::int64_t>(f[2], "os tid"), unescape_field(f[3])});
    } else if (key == "run_id") {
      expect_fields(f, 2, line_no);
      h.run_id = unescape_field(f[1]);
    } else if (key == "scenario_id") {
      expect_fields(f, 2, line_no);
      h.scenario_id = unescape_field(f[1]);
    } else if (key == "process") {
      expect_fields(f, 2, line_no);
      h.process = unescape_field(f[1]);
    } else if (key == "pid") {
      expect_fields(f, 2, line_no);
      h.pid = parse_number<std::int64_t>(f[1], "pid");
    } else if (key == "scale_factor") {
      expect_fields(f, 2, line_no);
      h.scale_factor = parse_number<double>(f[1], "scale factor");
    } else if (key == "event_overhead_ns") {
      expect_fields(f, 2, line_no);
      h.calibration.event_overhead_ns = parse_number<std::int64_t>(f[1], "event overhead");
    } else if (key == "clock_resolution_ns") {
      expect_fields(f, 2, line_no);
      h.calibration.clock_resolution_ns = parse_number<std::int64_t>(f[1], "clock resolution");
    } else if (key == "levels") {
      expect_fields(f, 2, line_no);
      h.levels = unescape_field(f[1]);
    } else if (key == "samples_partial") {
      expect_fields(f, 2, line_no);
      h.samples_partial = f[1] == "1";
    } else if (key == "coarse") {
      expect_fields(f, 4, line_no);
      h.coarse = make_breakdown(parse_number<double>(f[1], "elapsed"),
                                parse_number<double>(f[2], "user"),
                                parse_number<double>(f[3], "system"));
    } else if (key == "end") {
      expect_fields(f, 2, line_no);
      if (parse_number<std::size_t>(f[1], "event count") != dump.events.size()) {
        throw Error(ErrorCode::kParse, "event count mismatch at end of dump (truncated file?)");
      }
      saw_end = true;
      break;
    } else {
      throw Error(ErrorCode::kParse, "unknown dump record '" + std::string(key) + "'");
    }
  }
  if (!saw_magic) throw Error(ErrorCode::kParse, "empty dump");
  if (!saw_end) throw Error(ErrorCode::kParse, "dump is missing its end record");
  return dump;
}

void save_dump(const Dump& dump, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_dump(dump, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Dump load_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return read_dump(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace tierprof
