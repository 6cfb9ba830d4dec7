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

#include "tierprof/scenario.h"

#include <fmt/format.h>

#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "text_util.h"
#include "tierprof/error.h"

namespace tierprof {

namespace {

constexpr std::array<std::string_view, 7> kRoleNames = {
    "GlobalManager", "GlobalController", "WorkflowManager", "LocalController",
    "NameServer",    "HostNode",         "ClientHost"};

using Setter = std::function<void(ScenarioConfig&, std::string_view)>;

template <typename T>
Setter set(T ScenarioConfig::*field) {
  return [field](ScenarioConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, std::string>) {
      c.*field = std::string(v);
    } else {
      c.*field = detail::parse_number<T>(v, "value");
    }
  };
}

Setter set_sleep(double PostStartSleep::*field) {
  return [field](ScenarioConfig& c, std::string_view v) {
    c.post_start_sleep.*field = detail::parse_number<double>(v, "value");
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"scenario_id", set(&ScenarioConfig::scenario_id)},
      {"zones", set(&ScenarioConfig::zones)},
      {"sites_per_zone", set(&ScenarioConfig::sites_per_zone)},
      {"hosts_per_site", set(&ScenarioConfig::hosts_per_site)},
      {"workflows_per_zone", set(&ScenarioConfig::workflows_per_zone)},
      {"client_users", set(&ScenarioConfig::client_users)},
      {"client_rate", set(&ScenarioConfig::client_rate)},
      {"run_duration", set(&ScenarioConfig::run_duration)},
      {"poll_timeout_ms", set(&ScenarioConfig::poll_timeout_ms)},
      {"post_start_sleep.global_controller", set_sleep(&PostStartSleep::global_controller)},
      {"post_start_sleep.name_server", set_sleep(&PostStartSleep::name_server)},
      {"post_start_sleep.local_controller", set_sleep(&PostStartSleep::local_controller)},
      {"post_start_sleep.workflow_manager", set_sleep(&PostStartSleep::workflow_manager)},
      {"post_start_sleep.host_group", set_sleep(&PostStartSleep::host_group)},
      {"post_start_sleep.client_host", set_sleep(&PostStartSleep::client_host)},
      {"heartbeat_interval", set(&ScenarioConfig::heartbeat_interval)},
      {"heartbeat_miss_limit", set(&ScenarioConfig::heartbeat_miss_limit)},
      {"workflow_load_high", set(&ScenarioConfig::workflow_load_high)},
      {"workflow_load_low", set(&ScenarioConfig::workflow_load_low)},
      {"workflow_adjust_interval", set(&ScenarioConfig::workflow_adjust_interval)},
      {"bootstrap_deadline", set(&ScenarioConfig::bootstrap_deadline)},
      {"base_port", set(&ScenarioConfig::base_port)},
      {"sample_interval_ms", set(&ScenarioConfig::sample_interval_ms)},
      {"reference_users", set(&ScenarioConfig::reference_users)},
  };
  return table;
}

void require(bool ok, std::string_view key, std::string_view rule) {
  if (!ok) throw Error(ErrorCode::kConfig, fmt::format("{}: must be {}", key, rule));
}

}  // namespace

std::string_view to_string(NodeRole role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<NodeRole> parse_node_role(std::string_view text) {
  for (std::size_t i = 0; i < kRoleNames.size(); ++i) {
    if (kRoleNames[i] == text) return static_cast<NodeRole>(i);
  }
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  require(!scenario_id.empty() && scenario_id.find_first_of(" \t\n") == std::string::npos,
          "scenario_id", "a non-empty word");
  require(zones >= 1, "zones", ">= 1");
  require(sites_per_zone >= 1, "sites_per_zone", ">= 1");
  require(hosts_per_site >= 0, "hosts_per_site", ">= 0");
  require(workflows_per_zone >= 0, "workflows_per_zone", ">= 0");
  require(client_users >= 0, "client_users", ">= 0");
  require(client_rate >= 0, "client_rate", ">= 0");
  require(run_duration >= 0, "run_duration", ">= 0");
  require(poll_timeout_ms > 0, "poll_timeout_ms", "> 0");
  const PostStartSleep& s = post_start_sleep;
  for (double v : {s.global_controller, s.name_server, s.local_controller, s.workflow_manager,
                   s.host_group, s.client_host}) {
    require(v >= 0, "post_start_sleep", ">= 0");
  }
  require(heartbeat_interval > 0, "heartbeat_interval", "> 0");
  require(heartbeat_miss_limit >= 1, "heartbeat_miss_limit", ">= 1");
  require(workflow_load_low >= 0, "workflow_load_low", ">= 0");
  require(workflow_load_low < workflow_load_high, "workflow_load_low", "< workflow_load_high");
  require(workflow_adjust_interval > 0, "workflow_adjust_interval", "> 0");
  require(bootstrap_deadline > 0, "bootstrap_deadline", "> 0");
  require(base_port == 0 || (base_port >= 1024 && base_port <= 60000), "base_port",
          "0 or within [1024, 60000]");
  require(sample_interval_ms > 0, "sample_interval_ms", "> 0");
  require(reference_users >= 1, "reference_users", ">= 1");
}

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig config;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split(text, '\n')) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: expected key = value", line_no));
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    try {
      it->second(config, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, fmt::format("line {}: {}: {}", line_no, key, e.what()));
    }
  }
  config.validate();
  return config;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read scenario " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

std::string scenario_to_text(const ScenarioConfig& c) {
  const PostStartSleep& s = c.post_start_sleep;
  std::string out;
  auto put = [&](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  put("scenario_id", c.scenario_id);
  put("zones", c.zones);
  put("sites_per_zone", c.sites_per_zone);
  put("hosts_per_site", c.hosts_per_site);
  put("workflows_per_zone", c.workflows_per_zone);
  put("client_users", c.client_users);
  put("client_rate", detail::format_double(c.client_rate));
  put("run_duration", detail::format_double(c.run_duration));
  put("poll_timeout_ms", detail::format_double(c.poll_timeout_ms));
  put("post_start_sleep.global_controller", detail::format_double(s.global_controller));
  put("post_start_sleep.name_server", detail::format_double(s.name_server));
  put("post_start_sleep.local_controller", detail::format_double(s.local_controller));
  put("post_start_sleep.workflow_manager", detail::format_double(s.workflow_manager));
  put("post_start_sleep.host_group", detail::format_double(s.host_group));
  put("post_start_sleep.client_host", detail::format_double(s.client_host));
  put("heartbeat_interval", detail::format_double(c.heartbeat_interval));
  put("heartbeat_miss_limit", c.heartbeat_miss_limit);
  put("workflow_load_high", detail::format_double(c.workflow_load_high));
  put("workflow_load_low", detail::format_double(c.workflow_load_low));
  put("workflow_adjust_interval", detail::format_double(c.workflow_adjust_interval));
  put("bootstrap_deadline", detail::format_double(c.bootstrap_deadline));
  put("base_port", c.base_port);
  put("sample_interval_ms", detail::format_double(c.sample_interval_ms));
  put("reference_users", c.reference_users);
  return out;
}

}  // namespace tierprof
