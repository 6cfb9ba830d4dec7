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
#include <optional>
#include <string>
#include <string_view>

namespace tierprof {

enum class NodeRole : std::uint8_t {
  kGlobalManager,
  kGlobalController,
  kWorkflowManager,
  kLocalController,
  kNameServer,
  kHostNode,
  kClientHost,
};

std::string_view to_string(NodeRole role);
std::optional<NodeRole> parse_node_role(std::string_view text);

// Seconds each start step of the manager sleeps after launching its entities.
struct PostStartSleep {
  double global_controller = 5;
  double name_server = 5;
  double local_controller = 0;
  double workflow_manager = 0;
  double host_group = 5;
  double client_host = 0;

  double total() const {
    return global_controller + name_server + local_controller + workflow_manager + host_group +
           client_host;
  }
};

// Topology and timing of one testbed run. Times are seconds unless the name
// says otherwise.
struct ScenarioConfig {
  std::string scenario_id = "default";
  int zones = 1;
  int sites_per_zone = 2;
  int hosts_per_site = 7;
  int workflows_per_zone = 1;
  int client_users = 100;
  double client_rate = 50;  // requests per second, whole client host
  double run_duration = 60;
  double poll_timeout_ms = 1;
  PostStartSleep post_start_sleep;
  double heartbeat_interval = 1;
  int heartbeat_miss_limit = 3;
  double workflow_load_high = 100;  // requests per second per instance
  double workflow_load_low = 10;
  double workflow_adjust_interval = 1;
  double bootstrap_deadline = 30;  // per phase
  int base_port = 0;               // 0 picks ephemeral ports
  double sample_interval_ms = 10;
  int reference_users = 10000;

  // Desk-scale users relative to the reference deployment.
  double scale_factor() const {
    return static_cast<double>(client_users) / static_cast<double>(reference_users);
  }
  int local_controller_count() const { return zones * sites_per_zone; }
  int host_count() const { return zones * sites_per_zone * hosts_per_site; }
  int workflow_manager_count() const { return zones * workflows_per_zone; }
  bool has_client_host() const { return client_users > 0; }

  // Throws Error(kConfig) naming the first offending key.
  void validate() const;
};

// "key = value" lines; '#' starts a comment. Unknown keys and malformed
// values throw Error(kConfig). The result is validated.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_text(const ScenarioConfig& config);

}  // namespace tierprof
