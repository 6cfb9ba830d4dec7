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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tierprof/process_times.h"
#include "tierprof/types.h"

namespace tierprof {

using SiteId = std::uint32_t;

enum class EventKind : std::uint8_t { kEnter, kExit };

// One timestamped bracket event. Stack samples are carried separately as
// StackSample records since they hold a whole stack rather than one site.
struct ProfileEvent {
  std::uint32_t thread_id = 0;
  SiteId site = 0;
  EventKind kind = EventKind::kEnter;
  std::optional<TimeCategory> tag;
  std::int64_t wall_ns = 0;
  std::int64_t cpu_ns = 0;
};

struct SiteRecord {
  CodeSite site;
  std::optional<TimeCategory> tag;
};

struct ThreadRecord {
  std::uint32_t thread_id = 0;
  std::int64_t os_tid = 0;
  std::string name;
};

struct StackSample {
  std::uint32_t thread_id = 0;
  std::int64_t wall_ns = 0;
  std::int64_t cpu_ns = 0;
  std::vector<SiteId> stack;  // outermost frame first
};

struct NestingViolation {
  std::uint32_t thread_id = 0;
  SiteId site = 0;
  std::int64_t wall_ns = 0;
};

struct Calibration {
  std::int64_t event_overhead_ns = 0;
  std::int64_t clock_resolution_ns = 1;
};

struct DumpHeader {
  std::string run_id;
  std::string scenario_id;
  std::string process;
  std::int64_t pid = 0;
  double scale_factor = 1.0;
  Calibration calibration;
  std::string levels;
  std::optional<CoarseBreakdown> coarse;
  bool samples_partial = false;
};

struct Dump {
  DumpHeader header;
  std::vector<SiteRecord> sites;  // indexed by SiteId
  std::vector<ThreadRecord> threads;
  std::vector<ProfileEvent> events;
  std::vector<StackSample> samples;
  std::vector<NestingViolation> violations;
};

inline constexpr int kDumpFormatVersion = 1;

// Tab-separated text, one record per line, fixed field order:
//
//   tierprof-dump <version>
//   run_id <id> / scenario_id <id> / process <name> / pid <n>
//   scale_factor <x> / event_overhead_ns <n> / clock_resolution_ns <n>
//   levels <list> / samples_partial <0|1> / [coarse <elapsed> <user> <sys>]
//   site <id> <kind> <tag|-> <line> <file> <symbol>
//   thread <tid> <os_tid> <name>
//   E|X <tid> <site> <wall_ns> <cpu_ns>
//   S <tid> <wall_ns> <cpu_ns> <site,site,...>
//   V <tid> <site> <wall_ns>
//   end <event count>
void write_dump(const Dump& dump, std::ostream& out);
Dump read_dump(std::istream& in);

void save_dump(const Dump& dump, const std::filesystem::path& path);
Dump load_dump(const std::filesystem::path& path);

}  // namespace tierprof
