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

#include <sys/resource.h>
#include <sys/types.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tierprof/entity.h"
#include "tierprof/event_loop.h"
#include "tierprof/liveness.h"
#include "tierprof/process_times.h"
#include "tierprof/scenario.h"

namespace tierprof {

enum class BootstrapPhase : std::uint8_t {
  kIdle,
  kManagerUp,
  kGlobalControllerUp,
  kNameServerUp,
  kLocalControllersUp,
  kWorkflowManagersUp,
  kHostsUp,
  kClientsUp,
  kRunning,
};

std::string_view to_string(BootstrapPhase phase);

// Entities run as child processes (the default for real runs) or as threads
// of the calling process (fast tests). Both speak the same wire protocol.
enum class LaunchMode : std::uint8_t { kProcess, kThread };

struct TopologyOptions {
  LaunchMode mode = LaunchMode::kThread;
  // Process mode: executable whose `entity` subcommand runs one entity.
  std::filesystem::path entity_binary;
  // Process mode: working directory for entity logs, dumps and results.
  std::filesystem::path run_dir;
  // Process mode: KEY=VALUE strings added to every entity's environment.
  std::vector<std::string> extra_env;
  std::uint64_t seed = 1;
};

struct TimelineEntry {
  BootstrapPhase phase;
  std::int64_t wall_ns;
};

struct EntityHandle {
  EntitySpec spec;
  pid_t pid = 0;
  std::int64_t spawn_ns = 0;
  std::int64_t exit_ns = 0;
  std::optional<std::int64_t> killed_ns;
  bool registered = false;
  bool reaped = false;
  int exit_status = 0;  // process exit code, or 128 + signal
  std::optional<CoarseBreakdown> coarse;
  std::optional<EntityResult> result;

  // Thread mode.
  std::atomic<bool> abort{false};
  std::thread thread;
  std::atomic<bool> finished{false};
};

// The global manager: bootstraps the hierarchy phase by phase, monitors
// liveness over heartbeats while Running, and shuts everything down.
//
// Each start step launches its entities and then sleeps for the configured
// post-start time; the wait for their registrations happens afterwards, so
// the sleep is pure overhead on the critical path.
class Topology {
 public:
  Topology(ScenarioConfig config, TopologyOptions options);
  ~Topology();
  Topology(const Topology&) = delete;
  Topology& operator=(const Topology&) = delete;

  // Throws Error(kPortUnavailable), Error(kEntitySpawnFailed) or
  // Error(kBootstrapTimeout) naming the role or phase.
  void bootstrap();

  // Runs the manager's poll loop while Running, checking liveness.
  LoopStats monitor(double seconds);

  // SIGKILL (process mode) or abort flag (thread mode); no goodbye message.
  void kill(const std::string& name);

  // Shutdown to the client host first (so it can drain), then to everyone;
  // reaps processes or joins threads and collects results. Idempotent.
  void shutdown();

  BootstrapPhase phase() const { return phase_; }
  const std::vector<TimelineEntry>& timeline() const { return timeline_; }
  std::int64_t start_ns() const { return start_ns_; }
  const ScenarioConfig& config() const { return config_; }
  std::vector<const EntityHandle*> entities() const;
  const EntityHandle* find(std::string_view name) const;
  // Entities per role including the manager itself.
  std::map<NodeRole, int> role_counts() const;
  const LivenessMonitor& liveness() const { return liveness_; }
  const LoopStats& manager_loop() const { return loop_.totals(); }
  std::uint64_t heartbeats_received() const { return heartbeats_; }

 private:
  EntityHandle& add_entity(std::string name, NodeRole role, int zone, int site, int index);
  std::uint16_t listen_port_for(NodeRole role);
  void mark(BootstrapPhase phase);
  void spawn_entity(EntityHandle& handle);
  void await_registration(const std::vector<EntityHandle*>& group, BootstrapPhase phase);
  void register_name(const EntityHandle& handle);
  void check_liveness();
  void handle(ConnId from, const Message& m);

  void start_global_controller();
  void start_name_server();
  void start_local_controllers();
  void start_workflow_managers();
  void start_hosts();
  void start_client_host();
  void shutdown_entities();
  void reap_entities(double timeout_s);

  ScenarioConfig config_;
  TopologyOptions options_;
  EventLoop loop_;
  LivenessMonitor liveness_;
  BootstrapPhase phase_ = BootstrapPhase::kIdle;
  std::vector<TimelineEntry> timeline_;
  std::int64_t start_ns_;
  Endpoint manager_endpoint_;
  std::uint16_t next_port_ = 0;
  std::vector<std::unique_ptr<EntityHandle>> entities_;
  std::map<std::string, ConnId> conn_of_;
  std::map<std::string, Endpoint> listen_of_;
  std::set<std::string> closed_;
  std::optional<ConnId> name_server_conn_;
  std::uint64_t heartbeats_ = 0;
  bool shut_down_ = false;
};

}  // namespace tierprof
