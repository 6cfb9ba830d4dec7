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

#include "tierprof/liveness.h"

namespace tierprof {
namespace {

constexpr std::int64_t kSec = 1'000'000'000;

TEST(Liveness, KilledHostIsReportedWithinTheBound) {
  LivenessMonitor m(kSec, 3);
  m.watch("host.0.0.0", NodeRole::kHostNode, "0.0", 0);
  m.watch("host.0.0.1", NodeRole::kHostNode, "0.0", 0);
  // Both heartbeat every second; host.0.0.0 dies at t = 2 s.
  std::int64_t detected = -1;
  for (std::int64_t t = 0; t <= 10 * kSec; t += kSec / 100) {
    if (t % kSec == 0) {
      if (t <= 2 * kSec) m.heartbeat("host.0.0.0", t);
      m.heartbeat("host.0.0.1", t);
    }
    for (const FailureRecord& f : m.check(t)) {
      EXPECT_EQ(f.name, "host.0.0.0");
      detected = f.detected_ns;
    }
  }
  ASSERT_GE(detected, 0);
  EXPECT_LE(detected, 6 * kSec);
  EXPECT_GT(detected, 2 * kSec + m.threshold_ns() - kSec / 100);
  ASSERT_EQ(m.report().failures.size(), 1u);
  EXPECT_EQ(m.report().failures[0].last_heartbeat_ns, 2 * kSec);
  EXPECT_TRUE(m.failed("host.0.0.0"));
  EXPECT_FALSE(m.failed("host.0.0.1"));
}

TEST(Liveness, HealthyRunReportsNothing) {
  LivenessMonitor m(kSec, 3);
  m.watch("gc", NodeRole::kGlobalController, "", 0);
  for (std::int64_t t = 0; t <= 20 * kSec; t += kSec) {
    m.heartbeat("gc", t);
    EXPECT_TRUE(m.check(t).empty());
  }
  EXPECT_TRUE(m.report().failures.empty());
}

TEST(Liveness, ControllerFailureMarksItsHostsUnreachable) {
  LivenessMonitor m(kSec, 3);
  m.watch("lc.0.0", NodeRole::kLocalController, "0.0", 0);
  m.watch("lc.0.1", NodeRole::kLocalController, "0.1", 0);
  m.watch("host.0.0.0", NodeRole::kHostNode, "0.0", 0);
  m.watch("host.0.1.0", NodeRole::kHostNode, "0.1", 0);
  for (std::int64_t t = kSec; t <= 8 * kSec; t += kSec) {
    m.heartbeat("lc.0.1", t);
    m.heartbeat("host.0.0.0", t);
    m.heartbeat("host.0.1.0", t);
    m.check(t);
  }
  ASSERT_EQ(m.report().failures.size(), 1u);
  EXPECT_EQ(m.report().failures[0].name, "lc.0.0");
  EXPECT_LE(m.report().failures[0].detected_ns, 4 * kSec);
  EXPECT_EQ(m.report().unreachable_via_controller, std::vector<std::string>{"host.0.0.0"});
}

TEST(Liveness, ResetForgivesTheBootstrapGap) {
  LivenessMonitor m(kSec, 3);
  m.watch("ns", NodeRole::kNameServer, "", 0);
  m.reset(30 * kSec);
  EXPECT_TRUE(m.check(31 * kSec).empty());
  EXPECT_EQ(m.check(35 * kSec).size(), 1u);
  EXPECT_TRUE(m.check(40 * kSec).empty());  // reported once
}

TEST(Liveness, ThresholdIsMissLimitIntervals) {
  EXPECT_EQ(LivenessMonitor(200'000'000, 3).threshold_ns(), 600'000'000);
}

}  // namespace
}  // namespace tierprof
