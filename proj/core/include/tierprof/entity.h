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

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tierprof/event_loop.h"
#include "tierprof/net.h"
#include "tierprof/scenario.h"

namespace tierprof {

// Everything one testbed entity needs to start. Names are deterministic:
// gc, ns, lc.<zone>.<site>, wm.<zone>.<n>, host.<zone>.<site>.<n>, client.
struct EntitySpec {
  std::string name;
  NodeRole role = NodeRole::kHostNode;
  int zone = 0;
  int site = 0;
  int index = 0;
  Endpoint manager;
  std::optional<Endpoint> parent;       // GC for LC/WM, LC for hosts
  std::optional<Endpoint> name_server;  // client host
  std::uint16_t listen_port = 0;        // listening roles; 0 = ephemeral
  std::uint64_t seed = 1;
};

// Whether entities of this role accept connections.
bool role_listens(NodeRole role);

// Site key shared by a LocalController and the hosts behind it.
std::string site_key(int zone, int site);

struct LoadReport {
  std::uint64_t planned = 0;
  std::uint64_t sent = 0;
  std::uint64_t answered = 0;
  double latency_p50_ms = 0;
  double latency_p90_ms = 0;
  double latency_p99_ms = 0;
  std::map<std::string, std::uint64_t> per_instance;  // requests sent per target
};

// Requests a client host issues over a run: rate x duration, none without
// users. Fixed in advance so runs with the same inputs send identical counts.
std::uint64_t planned_requests(int users, double rate, double duration_s);

struct EntityResult {
  std::string name;
  NodeRole role = NodeRole::kHostNode;
  bool clean_exit = false;
  std::string error;
  LoopStats loop;
  // sent.<MsgType>, received.<MsgType>, seq_violations and role counters.
  std::map<std::string, std::uint64_t> counters;
  std::optional<LoadReport> load;
  std::map<std::string, std::uint64_t> instance_requests;  // workflow managers

  std::uint64_t counter(std::string_view key) const;
};

// Runs one entity until the manager sends Shutdown. Errors (lost manager,
// missing RegisterAck, NoActiveWorkflow) end the run and are reported in the
// result rather than thrown. A set `abort` flag stops it silently, like a
// killed process: the result then has clean_exit false and error "aborted".
EntityResult run_entity(const EntitySpec& spec, const ScenarioConfig& config,
                        const std::atomic<bool>* abort = nullptr);

std::string result_to_text(const EntityResult& result);
EntityResult result_from_text(std::string_view text);  // throws Error(kParse)

// Environment handed to a spawned entity process (KEY=VALUE strings):
// HOST_NAME, NAME_SERVER_ADDR, NAME_SERVER_UPDATE_PORT and TIERPROF_* keys.
std::vector<std::string> entity_environment(const EntitySpec& spec);
// Inverse, reading the current process environment. Throws Error(kConfig).
EntitySpec entity_spec_from_environment();

}  // namespace tierprof
