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

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <climits>
#include <thread>

#include "tierprof/clock.h"
#include "tierprof/error.h"
#include "tierprof/process_times.h"

namespace tierprof {
namespace {

TEST(Breakdown, PlatformAverages) {
  const CoarseBreakdown b = make_breakdown(44.15, 0.64, 1.05);
  EXPECT_NEAR(b.other_s, 42.46, 1e-9);
  EXPECT_FALSE(b.oversubscribed);
}

TEST(Breakdown, AllZeros) {
  const CoarseBreakdown b = make_breakdown(0, 0, 0);
  EXPECT_EQ(b.other_s, 0.0);
  EXPECT_FALSE(b.oversubscribed);
}

TEST(Breakdown, CpuAboveElapsedIsOversubscribed) {
  const CoarseBreakdown b = make_breakdown(1.0, 1.5, 0.2);
  EXPECT_EQ(b.other_s, 0.0);
  EXPECT_TRUE(b.oversubscribed);
}

TEST(Breakdown, NegativeInputsAreRejected) {
  EXPECT_THROW(make_breakdown(-1, 0, 0), Error);
}

TEST(Breakdown, FromRusage) {
  rusage u{};
  u.ru_utime = {2, 500'000};
  u.ru_stime = {0, 250'000};
  const CoarseBreakdown b = breakdown_from_rusage(u, 10.0);
  EXPECT_DOUBLE_EQ(b.user_s, 2.5);
  EXPECT_DOUBLE_EQ(b.system_s, 0.25);
  EXPECT_DOUBLE_EQ(b.other_s, 7.25);
}

TEST(SelfTimes, BusyLoopShowsUpAsUserTime) {
  const std::int64_t start = wall_now_ns();
  spin_for_ns(100'000'000);
  const CoarseBreakdown b = read_self_times(start);
  EXPECT_GE(b.elapsed_s, 0.1);
  EXPECT_GT(b.user_s + b.system_s, 0.05);
}

TEST(ProcessTimes, ReadsAChildProcess) {
  const pid_t child = ::fork();
  ASSERT_GE(child, 0);
  if (child == 0) {
    spin_for_ns(100'000'000);
    ::_exit(0);
  }
  // A zombie still has its accounting in /proc.
  siginfo_t info{};
  ::waitid(P_PID, static_cast<id_t>(child), &info, WEXITED | WNOWAIT);
  const CoarseBreakdown b = read_process_times(child);
  ::waitpid(child, nullptr, 0);
  EXPECT_GE(b.user_s + b.system_s, 0.05);
  EXPECT_GE(b.elapsed_s + 0.02, b.user_s + b.system_s);
}

TEST(ProcessTimes, MissingProcessIsReported) {
  try {
    read_process_times(INT_MAX);
    FAIL() << "expected ProcessNotFound";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProcessNotFound);
  }
}

}  // namespace
}  // namespace tierprof
