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

#include "tierprof/process_times.h"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "tierprof/clock.h"
#include "tierprof/error.h"

namespace tierprof {
namespace {

double timeval_seconds(const timeval& tv) {
  return static_cast<double>(tv.tv_sec) + static_cast<double>(tv.tv_usec) / 1e6;
}

}  // namespace

CoarseBreakdown make_breakdown(double elapsed_s, double user_s, double system_s) {
  if (elapsed_s < 0 || user_s < 0 || system_s < 0) {
    throw Error(ErrorCode::kConfig, "coarse times must be non-negative");
  }
  CoarseBreakdown b;
  b.elapsed_s = elapsed_s;
  b.user_s = user_s;
  b.system_s = system_s;
  b.other_s = std::max(0.0, elapsed_s - user_s - system_s);
  b.oversubscribed = user_s + system_s > elapsed_s;
  return b;
}

CoarseBreakdown breakdown_from_rusage(const rusage& usage, double elapsed_s) {
  return make_breakdown(elapsed_s, timeval_seconds(usage.ru_utime), timeval_seconds(usage.ru_stime));
}

CoarseBreakdown read_self_times(std::int64_t start_wall_ns) {
  rusage usage{};
  ::getrusage(RUSAGE_SELF, &usage);
  return breakdown_from_rusage(usage, to_seconds_since(start_wall_ns));
}

CoarseBreakdown read_process_times(pid_t pid) {
  std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
  std::string line;
  if (!stat || !std::getline(stat, line)) {
    throw Error(ErrorCode::kProcessNotFound, "no such process: " + std::to_string(pid));
  }
  // comm may contain spaces and parentheses; fields resume after the last ')'.
  const auto close = line.rfind(')');
  if (close == std::string::npos) throw Error(ErrorCode::kParse, "bad /proc stat line");
  std::istringstream rest(line.substr(close + 2));
  std::string field;
  unsigned long long utime = 0, stime = 0, starttime = 0;
  // rest starts at field 3 (state); utime/stime are 14/15, starttime is 22.
  for (int index = 3; index <= 22 && rest >> field; ++index) {
    if (index == 14) utime = std::stoull(field);
    if (index == 15) stime = std::stoull(field);
    if (index == 22) starttime = std::stoull(field);
  }
  const double hz = static_cast<double>(::sysconf(_SC_CLK_TCK));
  double uptime = 0;
  std::ifstream("/proc/uptime") >> uptime;
  const double elapsed = std::max(0.0, uptime - static_cast<double>(starttime) / hz);
  return make_breakdown(elapsed, static_cast<double>(utime) / hz, static_cast<double>(stime) / hz);
}

}  // namespace tierprof
