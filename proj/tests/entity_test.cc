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

#include <cstdlib>

#include "tierprof/entity.h"
#include "tierprof/error.h"

namespace tierprof {
namespace {

TEST(PlannedRequests, RateTimesDuration) {
  EXPECT_EQ(planned_requests(100, 50, 10), 500u);
  EXPECT_EQ(planned_requests(0, 50, 10), 0u);
  EXPECT_EQ(planned_requests(100, 0, 10), 0u);
  EXPECT_EQ(planned_requests(100, 40, 2.5), 100u);
}

TEST(Roles, ListeningAndSiteKeys) {
  EXPECT_TRUE(role_listens(NodeRole::kGlobalController));
  EXPECT_TRUE(role_listens(NodeRole::kNameServer));
  EXPECT_TRUE(role_listens(NodeRole::kLocalController));
  EXPECT_TRUE(role_listens(NodeRole::kWorkflowManager));
  EXPECT_FALSE(role_listens(NodeRole::kHostNode));
  EXPECT_FALSE(role_listens(NodeRole::kClientHost));
  EXPECT_EQ(site_key(0, 1), "0.1");
}

TEST(EntityResultText, RoundTrips) {
  EntityResult r;
  r.name = "client";
  r.role = NodeRole::kClientHost;
  r.clean_exit = false;
  r.error = "lost manager\twhile draining";
  r.loop.poll_invocations = 1234;
  r.loop.wall_in_poll_ns = 900;
  r.loop.wall_total_ns = 1000;
  r.counters = {{"sent.ClientRequest", 40}, {"seq_violations", 0}};
  LoadReport load;
  load.planned = 40;
  load.sent = 40;
  load.answered = 39;
  load.latency_p50_ms = 0.25;
  load.latency_p90_ms = 0.5;
  load.latency_p99_ms = 1.75;
  load.per_instance = {{"wm.0.0/0", 20}, {"wm.0.0/1", 20}};
  r.load = load;
  r.instance_requests = {{"wm.0.0/0", 7}};

  const EntityResult back = result_from_text(result_to_text(r));
  EXPECT_EQ(back.name, r.name);
  EXPECT_EQ(back.role, r.role);
  EXPECT_EQ(back.clean_exit, r.clean_exit);
  EXPECT_EQ(back.error, r.error);
  EXPECT_EQ(back.loop.poll_invocations, 1234u);
  EXPECT_EQ(back.loop.wall_in_poll_ns, 900);
  EXPECT_EQ(back.loop.wall_total_ns, 1000);
  EXPECT_EQ(back.counters, r.counters);
  ASSERT_TRUE(back.load.has_value());
  EXPECT_EQ(back.load->answered, 39u);
  EXPECT_DOUBLE_EQ(back.load->latency_p99_ms, 1.75);
  EXPECT_EQ(back.load->per_instance, load.per_instance);
  EXPECT_EQ(back.instance_requests, r.instance_requests);
  EXPECT_EQ(back.counter("sent.ClientRequest"), 40u);
  EXPECT_EQ(back.counter("absent"), 0u);
}

TEST(EntityResultText, RejectsGarbage) {
  EXPECT_THROW(result_from_text("not a result"), Error);
}

TEST(EntityEnvironment, RoundTripsThroughTheProcessEnvironment) {
  EntitySpec spec;
  spec.name = "host.0.1.3";
  spec.role = NodeRole::kHostNode;
  spec.zone = 0;
  spec.site = 1;
  spec.index = 3;
  spec.manager = {"127.0.0.1", 4000};
  spec.parent = Endpoint{"127.0.0.1", 4005};
  spec.name_server = Endpoint{"127.0.0.1", 4002};
  spec.seed = 99;
  const std::vector<std::string> env = entity_environment(spec);
  bool host_name = false;
  for (const std::string& kv : env) {
    const auto eq = kv.find('=');
    ASSERT_NE(eq, std::string::npos) << kv;
    if (kv == "HOST_NAME=host.0.1.3") host_name = true;
    ::setenv(kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str(), 1);
  }
  EXPECT_TRUE(host_name);
  const EntitySpec back = entity_spec_from_environment();
  EXPECT_EQ(back.name, spec.name);
  EXPECT_EQ(back.role, spec.role);
  EXPECT_EQ(back.site, 1);
  EXPECT_EQ(back.index, 3);
  EXPECT_EQ(back.manager.port, 4000);
  ASSERT_TRUE(back.parent.has_value());
  EXPECT_EQ(back.parent->port, 4005);
  ASSERT_TRUE(back.name_server.has_value());
  EXPECT_EQ(back.name_server->port, 4002);
  EXPECT_EQ(back.seed, 99u);
}

}  // namespace
}  // namespace tierprof
