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

#include <filesystem>

#include "tierprof/error.h"
#include "tierprof/scenario.h"

namespace tierprof {
namespace {

namespace fs = std::filesystem;

void expect_config_error(std::string_view text, std::string_view mentions) {
  try {
    parse_scenario(text);
    FAIL() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find(mentions), std::string::npos) << e.what();
  }
}

TEST(Scenario, DefaultsDescribeTheReferenceTopology) {
  const ScenarioConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.local_controller_count(), 2);
  EXPECT_EQ(c.host_count(), 14);
  EXPECT_EQ(c.workflow_manager_count(), 1);
  EXPECT_TRUE(c.has_client_host());
  EXPECT_DOUBLE_EQ(c.post_start_sleep.total(), 15.0);
  EXPECT_DOUBLE_EQ(c.scale_factor(), 0.01);
}

TEST(Scenario, ParsesKeysCommentsAndWhitespace) {
  const ScenarioConfig c = parse_scenario(
      "# comment\n"
      "scenario_id = demo   # trailing comment\n"
      "  zones=2\n"
      "\n"
      "hosts_per_site = 0\n"
      "client_users = 0\n"
      "post_start_sleep.host_group = 0.5\n");
  EXPECT_EQ(c.scenario_id, "demo");
  EXPECT_EQ(c.zones, 2);
  EXPECT_EQ(c.host_count(), 0);
  EXPECT_FALSE(c.has_client_host());
  EXPECT_DOUBLE_EQ(c.post_start_sleep.host_group, 0.5);
}

TEST(Scenario, TextRoundTrip) {
  ScenarioConfig c;
  c.scenario_id = "rt";
  c.zones = 3;
  c.client_rate = 12.5;
  c.poll_timeout_ms = 0.25;
  c.post_start_sleep.name_server = 1.5;
  c.base_port = 20000;
  const std::string text = scenario_to_text(c);
  EXPECT_EQ(scenario_to_text(parse_scenario(text)), text);
}

TEST(Scenario, RejectsBadInput) {
  expect_config_error("zones = 0\n", "zones");
  expect_config_error("colour = blue\n", "colour");
  expect_config_error("zones = many\n", "zones");
  expect_config_error("just words\n", "key = value");
  expect_config_error("poll_timeout_ms = 0\n", "poll_timeout_ms");
  expect_config_error("workflow_load_low = 200\n", "workflow_load_low");
  expect_config_error("base_port = 80\n", "base_port");
  expect_config_error("heartbeat_miss_limit = 0\n", "heartbeat_miss_limit");
  expect_config_error("post_start_sleep.name_server = -1\n", "post_start_sleep");
}

TEST(Scenario, ShippedFilesLoad) {
  const fs::path dir = TIERPROF_CONFIG_DIR;
  const ScenarioConfig def = load_scenario(dir / "default.conf");
  EXPECT_EQ(def.scenario_id, "default");
  EXPECT_EQ(def.hosts_per_site, 7);
  EXPECT_DOUBLE_EQ(def.post_start_sleep.total(), 15.0);
  const ScenarioConfig fast = load_scenario(dir / "fast.conf");
  EXPECT_EQ(fast.scenario_id, "fast");
  EXPECT_DOUBLE_EQ(fast.post_start_sleep.total(), 0.0);
  EXPECT_THROW(load_scenario(dir / "missing.conf"), Error);
}

TEST(NodeRoles, NamesRoundTrip) {
  for (NodeRole r : {NodeRole::kGlobalManager, NodeRole::kGlobalController,
                     NodeRole::kWorkflowManager, NodeRole::kLocalController,
                     NodeRole::kNameServer, NodeRole::kHostNode, NodeRole::kClientHost}) {
    EXPECT_EQ(parse_node_role(to_string(r)), r);
  }
  EXPECT_FALSE(parse_node_role("Router").has_value());
}

}  // namespace
}  // namespace tierprof
