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

#include <algorithm>
#include <set>

#include "tierprof/error.h"
#include "tierprof/net.h"
#include "tierprof/topology.h"

namespace tierprof {
namespace {

ScenarioConfig quick(int sites, int hosts, int users) {
  ScenarioConfig c;
  c.scenario_id = "quick";
  c.zones = 1;
  c.sites_per_zone = sites;
  c.hosts_per_site = hosts;
  c.client_users = users;
  c.client_rate = 40;
  c.run_duration = 1;
  c.post_start_sleep = PostStartSleep{0, 0, 0, 0, 0, 0};
  c.heartbeat_interval = 0.2;
  c.heartbeat_miss_limit = 3;
  c.bootstrap_deadline = 10;
  return c;
}

TopologyOptions threads() {
  TopologyOptions o;
  o.mode = LaunchMode::kThread;
  return o;
}

TEST(Topology, RoleCardinalityMatchesTheConfig) {
  Topology t(quick(2, 7, 100), threads());
  t.bootstrap();
  const auto counts = t.role_counts();
  EXPECT_EQ(counts.at(NodeRole::kGlobalManager), 1);
  EXPECT_EQ(counts.at(NodeRole::kGlobalController), 1);
  EXPECT_EQ(counts.at(NodeRole::kLocalController), 2);
  EXPECT_EQ(counts.at(NodeRole::kNameServer), 1);
  EXPECT_EQ(counts.at(NodeRole::kWorkflowManager), 1);
  EXPECT_EQ(counts.at(NodeRole::kHostNode), 14);
  EXPECT_EQ(counts.at(NodeRole::kClientHost), 1);
  std::set<std::string> names;
  for (const EntityHandle* h : t.entities()) names.insert(h->spec.name);
  EXPECT_EQ(names.size(), t.entities().size());
  EXPECT_TRUE(names.count("lc.0.1"));
  EXPECT_TRUE(names.count("host.0.1.6"));
  t.shutdown();
}

TEST(Topology, MinimalConfigReachesRunning) {
  Topology t(quick(1, 0, 0), threads());
  t.bootstrap();
  EXPECT_EQ(t.phase(), BootstrapPhase::kRunning);
  EXPECT_EQ(t.role_counts().count(NodeRole::kClientHost), 0u);
  t.monitor(0.3);
  t.shutdown();
  for (const EntityHandle* h : t.entities()) {
    ASSERT_TRUE(h->result.has_value()) << h->spec.name;
    EXPECT_TRUE(h->result->clean_exit) << h->spec.name << ": " << h->result->error;
  }
}

TEST(Topology, PhasesRunInOrderAndSleepsShowInTheTimeline) {
  ScenarioConfig c = quick(1, 1, 0);
  c.post_start_sleep.global_controller = 0.5;
  c.post_start_sleep.name_server = 0.5;
  c.post_start_sleep.host_group = 0.5;
  Topology t(c, threads());
  t.bootstrap();
  const auto& tl = t.timeline();
  ASSERT_FALSE(tl.empty());
  for (std::size_t i = 1; i < tl.size(); ++i) {
    EXPECT_GT(static_cast<int>(tl[i].phase), static_cast<int>(tl[i - 1].phase));
    EXPECT_GE(tl[i].wall_ns, tl[i - 1].wall_ns);
  }
  EXPECT_EQ(tl.front().phase, BootstrapPhase::kManagerUp);
  EXPECT_EQ(tl.back().phase, BootstrapPhase::kRunning);
  EXPECT_GE(tl.back().wall_ns, 1'500'000'000);
  t.shutdown();
}

TEST(Topology, KilledHostIsDetectedWithinTheBound) {
  Topology t(quick(1, 2, 0), threads());
  t.bootstrap();
  t.monitor(0.5);
  t.kill("host.0.0.1");
  t.monitor(1.5);
  const auto& failures = t.liveness().report().failures;
  ASSERT_EQ(failures.size(), 1u);
  EXPECT_EQ(failures[0].name, "host.0.0.1");
  const std::int64_t latency = failures[0].detected_ns - *t.find("host.0.0.1")->killed_ns;
  EXPECT_LE(latency, 800'000'000);
  t.shutdown();
}

TEST(Topology, LostControllerCascadesToItsHosts) {
  Topology t(quick(2, 2, 0), threads());
  t.bootstrap();
  t.monitor(0.3);
  t.kill("lc.0.0");
  t.monitor(1.5);
  const LivenessReport& report = t.liveness().report();
  bool lc_failed = false;
  for (const FailureRecord& f : report.failures) lc_failed |= f.name == "lc.0.0";
  EXPECT_TRUE(lc_failed);
  std::vector<std::string> unreachable = report.unreachable_via_controller;
  std::sort(unreachable.begin(), unreachable.end());
  EXPECT_EQ(unreachable, (std::vector<std::string>{"host.0.0.0", "host.0.0.1"}));
  t.shutdown();
}

TEST(Topology, ClientTrafficIsSpreadAcrossInstances) {
  ScenarioConfig c = quick(1, 1, 20);
  c.workflows_per_zone = 2;
  Topology t(c, threads());
  t.bootstrap();
  t.monitor(c.run_duration);
  t.shutdown();
  const EntityHandle* client = t.find("client");
  ASSERT_NE(client, nullptr);
  ASSERT_TRUE(client->result && client->result->load);
  const LoadReport& load = *client->result->load;
  EXPECT_EQ(load.planned, 40u);
  EXPECT_GE(load.sent, 36u);
  EXPECT_LE(load.sent, 44u);
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto& [target, n] : load.per_instance) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  ASSERT_FALSE(load.per_instance.empty());
  EXPECT_LE(hi - lo, 1u);
}

TEST(Topology, TakenBasePortIsReported) {
  std::uint16_t port = 0;
  UniqueFd holder = listen_tcp(0, &port);
  ScenarioConfig c = quick(1, 0, 0);
  c.base_port = port;
  Topology t(c, threads());
  try {
    t.bootstrap();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortUnavailable);
  }
}

TEST(Topology, MissingEntityBinaryFailsToSpawn) {
  TopologyOptions o;
  o.mode = LaunchMode::kProcess;
  o.entity_binary = "/nonexistent/tierprof";
  o.run_dir = ::testing::TempDir();
  Topology t(quick(1, 0, 0), o);
  try {
    t.bootstrap();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEntitySpawnFailed);
    EXPECT_NE(std::string(e.what()).find("GlobalController"), std::string::npos) << e.what();
  }
  t.shutdown();
}

TEST(Topology, KillingAnUnknownEntityThrows) {
  Topology t(quick(1, 0, 0), threads());
  EXPECT_THROW(t.kill("nobody"), Error);
}

}  // namespace
}  // namespace tierprof
