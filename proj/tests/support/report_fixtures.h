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

// Hand-built profiles with known row values, rendered by the golden tests.

#include <string>
#include <vector>

#include "tierprof/profile_model.h"

namespace tierprof::testing {

inline FunctionStats function_row(std::string file, int line, std::string symbol,
                                  std::uint64_t ncalls, std::uint64_t pcalls, double tottime,
                                  double cumtime) {
  FunctionStats f;
  f.site = {std::move(file), line, std::move(symbol), SiteKind::kFunction};
  f.ncalls_total = ncalls;
  f.ncalls_primitive = pcalls;
  f.tottime_ns = to_nanos(tottime);
  f.cumtime_ns = to_nanos(cumtime);
  f.tottime_cpu_ns = f.tottime_ns;
  f.cumtime_cpu_ns = f.cumtime_ns;
  return f;
}

inline FunctionStats builtin_row(std::string symbol, std::uint64_t ncalls, double tottime,
                                 std::optional<TimeCategory> tag = std::nullopt) {
  FunctionStats f = function_row("~", 0, std::move(symbol), ncalls, ncalls, tottime, tottime);
  f.site.kind = SiteKind::kBuiltin;
  f.tag = tag;
  return f;
}

// A 77.621 s simulator run dominated by socket polling and three sleeps. The
// last four rows hold the long tail of small calls and sort below the top 19.
inline Profile simulator_run_profile() {
  Profile p;
  p.run_id = "crun1000";
  p.scenario_id = "simulator";
  const std::string d = "driver_mininet.py";
  p.functions = {
      function_row(d, 2, "<module>", 1, 1, 0.001, 77.621),
      function_row(d, 209, "start_sim", 1, 1, 0.849, 77.613),
      builtin_row("built-in method poll", 111580, 59.322, TimeCategory::kIoWaitPoll),
      builtin_row("time.sleep", 3, 15.010, TimeCategory::kSleep),
      function_row(d, 186, "start_hosts", 1, 1, 0.001, 5.183),
      function_row(d, 163, "start_fakeNameServer", 1, 1, 0.000, 5.010),
      function_row(d, 134, "start_gc_lighthouseController", 1, 1, 0.000, 5.009),
      function_row(d, 264, "write", 3106, 3106, 0.013, 1.065),
      function_row("util.py", 25, "quietRun", 104, 104, 0.160, 1.052),
      function_row(d, 42, "__init__", 1, 1, 0.000, 0.980),
      function_row(d, 67, "allocate_singleSwitchTopo", 1, 1, 0.001, 0.943),
      function_row("node.py", 300, "linkTo", 19, 19, 0.001, 0.893),
      function_row("util.py", 79, "makeIntfPair", 19, 19, 0.001, 0.698),
      builtin_row("method 'write' of 'file' objects", 3106, 0.671),
      builtin_row("method 'flush' of 'file' objects", 3106, 0.381),
      function_row("node.py", 235, "cmd", 195, 195, 0.003, 0.294),
      builtin_row("time.time", 40024, 0.287),
      function_row("subprocess.py", 619, "__init__", 125, 125, 0.004, 0.273),
      function_row(d, 128, "start_topo", 1, 1, 0.000, 0.266),
      builtin_row("len", 94986, 0.229),
      builtin_row("isinstance", 94986, 0.229),
      builtin_row("getattr", 94985, 0.229),
      function_row("node.py", 120, "monitor", 94985, 94967, 0.229, 0.229),
  };
  return p;
}

// A controller start-up function whose time is almost entirely one sleep.
inline Profile controller_sleep_profile() {
  Profile p;
  p.run_id = "gc-lines";
  p.scenario_id = "simulator";
  const std::string d = "driver_mininet.py";
  const CodeSite scope{d, 149, "start_gc_lighthouseController", SiteKind::kFunction};
  FunctionStats f = function_row(d, 149, scope.symbol, 1, 1, 0.0, 5.08587);
  p.functions = {f};
  struct Line {
    int line;
    const char* text;
    std::int64_t us;
  };
  const std::vector<Line> lines = {
      {151, R"(print ("2. Starting Global Lighthouse Controller"),)", 16},
      {152, "self.gc_lighthouseController.cmd('export HOST_NAME=%s'%(self.gc_ligh", 258},
      {153, "self.gc_lighthouseController.cmd('export NAME_SERVER_ADDR=%s'%(self,", 182},
      {154, "self.gc_lighthouseController.cmd('export NAME_SERVER_UPDATE_PORT=%s'", 179},
      {155, R"(self.gc_lighthouseController.cmd("python3 %s &"%(GLOBAL_CONTROLLER)))", 6597},
      {156, R"(print (".... started\n"))", 579},
      {159, "sleep(5)", 5002929},
      {160, "yappi.get_func_stats().print_all()", 74569},
      {161, "yappi.get_thread_stats().print_all()", 557},
  };
  for (const Line& l : lines) {
    RegionStats r;
    r.scope = scope;
    r.site = {d, l.line, l.text, SiteKind::kRegion};
    r.hits = 1;
    r.time_ns = l.us * 1000;
    r.scope_time_ns = f.cumtime_ns;
    if (l.line == 159) r.tag = TimeCategory::kSleep;
    p.regions.push_back(r);
  }
  return p;
}

inline ThreadStats thread_row(std::string file, int line, std::string symbol, std::uint64_t ncall,
                              std::uint64_t pcall, double tsub, double ttot) {
  ThreadStats t;
  t.process = "driver";
  t.thread_id = 1;
  t.thread_name = "MainThread";
  t.site = {std::move(file), line, std::move(symbol), SiteKind::kFunction};
  t.ncall_total = ncall;
  t.ncall_primitive = pcall;
  t.tsub_cpu_ns = to_nanos(tsub);
  t.ttot_cpu_ns = to_nanos(ttot);
  t.tsub_wall_ns = t.tsub_cpu_ns;
  t.ttot_wall_ns = t.ttot_cpu_ns;
  return t;
}

// Per-thread CPU profile of topology construction; long paths get truncated.
inline Profile concurrency_profile() {
  Profile p;
  p.run_id = "threads";
  p.scenario_id = "simulator";
  const std::string egg = "/usr/lib/python2.7/site-packages/mininet-2.2.1-py2.7.egg/mininet/";
  const std::string sub = "/usr/lib/python2.7/subprocess.py";
  p.threads = {
      thread_row(egg + "util.py", 25, "quietRun", 179, 179, 0.372231, 0.983090),
      thread_row(egg + "node.py", 300, "Host.linkTo", 35, 35, 0.001244, 0.770000),
      thread_row(egg + "util.py", 79, "makeIntfPair", 35, 35, 0.001611, 0.541088),
      thread_row(sub, 757, "Popen.poll", 65625, 65625, 0.085931, 0.333069),
      thread_row("/usr/lib/python2.7/site-packages/line_profiler.py", 95, "wrapper", 3, 2,
                 0.000031, 0.278079),
      thread_row("/opt/openadn/driver_mininet.py", 141, "mininetDriver.start_topo", 1, 1,
                 0.000065, 0.248423),
      thread_row(egg + "net.py", 348, "Mininet.start", 1, 1, 0.000077, 0.248282),
      thread_row(sub, 1256, "Popen._internal_poll", 65804, 65804, 0.152177, 0.247391),
      thread_row(egg + "net.py", 303, "Mininet.build", 1, 1, 0.000024, 0.228708),
      thread_row(egg + "net.py", 255, "Mininet.configHosts", 1, 1, 0.001468, 0.228668),
      thread_row(egg + "node.py", 267, "Host.addIntf", 70, 70, 0.000413, 0.226883),
      thread_row(egg + "util.py", 120, "moveIntf", 35, 35, 0.000189, 0.226470),
      thread_row(egg + "util.py", 91, "retry", 35, 35, 0.000211, 0.226280),
      thread_row(egg + "util.py", 105, "moveIntfNoRetry", 35, 35, 0.001316, 0.226069),
      thread_row(sub, 619, "Popen.__init__", 216, 216, 0.008887, 0.090917),
      thread_row(sub, 1099, "Popen._execute_child", 216, 216, 0.031574, 0.074085),
      thread_row(egg + "node.py", 235, "Host.cmd", 153, 153, 0.003151, 0.029812),
  };
  return p;
}

}  // namespace tierprof::testing
