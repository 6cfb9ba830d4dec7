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

#include "tierprof/topology.h"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include <fmt/format.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "tierprof/clock.h"
#include "tierprof/error.h"
#include "tierprof/instrumentation.h"

extern char** environ;

namespace tierprof {

namespace {

constexpr double kLivenessCheckSeconds = 0.005;
constexpr double kClientDrainSeconds = 5.0;
constexpr double kShutdownSeconds = 5.0;
constexpr double kReapSeconds = 5.0;
constexpr const char* kLoopback = "127.0.0.1";

std::chrono::nanoseconds seconds_to_ns(double seconds) {
  return std::chrono::nanoseconds(static_cast<std::int64_t>(seconds * 1e9));
}

std::string env_key(const std::string& entry) { return entry.substr(0, entry.find('=')); }

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string_view to_string(BootstrapPhase phase) {
  switch (phase) {
    case BootstrapPhase::kIdle: return "Idle";
    case BootstrapPhase::kManagerUp: return "ManagerUp";
    case BootstrapPhase::kGlobalControllerUp: return "GlobalControllerUp";
    case BootstrapPhase::kNameServerUp: return "NameServerUp";
    case BootstrapPhase::kLocalControllersUp: return "LocalControllersUp";
    case BootstrapPhase::kWorkflowManagersUp: return "WorkflowManagersUp";
    case BootstrapPhase::kHostsUp: return "HostsUp";
    case BootstrapPhase::kClientsUp: return "ClientsUp";
    case BootstrapPhase::kRunning: return "Running";
  }
  return "?";
}

Topology::Topology(ScenarioConfig config, TopologyOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      loop_("gm"),
      liveness_(static_cast<std::int64_t>(config_.heartbeat_interval * 1e9),
                config_.heartbeat_miss_limit),
      start_ns_(wall_now_ns()) {
  config_.validate();
  if (options_.mode == LaunchMode::kProcess) {
    if (options_.entity_binary.empty()) {
      throw Error(ErrorCode::kConfig, "process mode needs an entity binary");
    }
    if (options_.run_dir.empty()) throw Error(ErrorCode::kConfig, "process mode needs a run dir");
    std::filesystem::create_directories(options_.run_dir);
  }
  loop_.on_message([this](ConnId from, const Message& m) { handle(from, m); });
  loop_.on_close([this](ConnId id) {
    for (const auto& [name, conn] : conn_of_) {
      if (conn == id) closed_.insert(name);
    }
  });
}

Topology::~Topology() {
  if (shut_down_) return;
  for (auto& h : entities_) {
    if (options_.mode == LaunchMode::kThread) {
      h->abort = true;
    } else if (h->pid > 0 && !h->reaped) {
      ::kill(h->pid, SIGKILL);
    }
  }
  for (auto& h : entities_) {
    if (h->thread.joinable()) h->thread.join();
    if (h->pid > 0 && !h->reaped) {
      int status = 0;
      ::waitpid(h->pid, &status, 0);
    }
  }
}

EntityHandle& Topology::add_entity(std::string name, NodeRole role, int zone, int site,
                                   int index) {
  auto handle = std::make_unique<EntityHandle>();
  handle->spec.name = std::move(name);
  handle->spec.role = role;
  handle->spec.zone = zone;
  handle->spec.site = site;
  handle->spec.index = index;
  handle->spec.manager = manager_endpoint_;
  handle->spec.listen_port = listen_port_for(role);
  handle->spec.seed = options_.seed + entities_.size();
  entities_.push_back(std::move(handle));
  return *entities_.back();
}

std::uint16_t Topology::listen_port_for(NodeRole role) {
  if (config_.base_port == 0 || !role_listens(role)) return 0;
  return next_port_++;
}

void Topology::mark(BootstrapPhase phase) {
  phase_ = phase;
  timeline_.push_back({phase, wall_now_ns() - start_ns_});
}

void Topology::bootstrap() {
  TIERPROF_FUNCTION();
  if (phase_ != BootstrapPhase::kIdle) throw Error(ErrorCode::kConfig, "bootstrap already ran");
  if (config_.base_port != 0) {
    // Manager, GC, NS, then one port per LC and WM.
    const int needed = 3 + config_.local_controller_count() + config_.workflow_manager_count();
    for (int i = 0; i < needed; ++i) {
      const auto port = static_cast<std::uint16_t>(config_.base_port + i);
      if (!port_available(port)) {
        throw Error(ErrorCode::kPortUnavailable, fmt::format("port {} is in use", port));
      }
    }
    next_port_ = static_cast<std::uint16_t>(config_.base_port + 1);
  }
  manager_endpoint_ =
      Endpoint{kLoopback, loop_.listen(static_cast<std::uint16_t>(config_.base_port))};
  loop_.every(kLivenessCheckSeconds, [this] {
    if (phase_ == BootstrapPhase::kRunning) check_liveness();
  });
  mark(BootstrapPhase::kManagerUp);

  start_global_controller();
  mark(BootstrapPhase::kGlobalControllerUp);
  start_name_server();
  mark(BootstrapPhase::kNameServerUp);
  start_local_controllers();
  mark(BootstrapPhase::kLocalControllersUp);
  start_workflow_managers();
  mark(BootstrapPhase::kWorkflowManagersUp);
  start_hosts();
  mark(BootstrapPhase::kHostsUp);
  if (config_.has_client_host()) {
    start_client_host();
    mark(BootstrapPhase::kClientsUp);
  }
  liveness_.reset(wall_now_ns());
  mark(BootstrapPhase::kRunning);
}

void Topology::start_global_controller() {
  TIERPROF_FUNCTION();
  EntityHandle& gc = add_entity("gc", NodeRole::kGlobalController, 0, 0, 0);
  spawn_entity(gc);
  if (config_.post_start_sleep.global_controller > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.global_controller));
  }
  await_registration({&gc}, BootstrapPhase::kGlobalControllerUp);
}

void Topology::start_name_server() {
  TIERPROF_FUNCTION();
  EntityHandle& ns = add_entity("ns", NodeRole::kNameServer, 0, 0, 0);
  spawn_entity(ns);
  if (config_.post_start_sleep.name_server > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.name_server));
  }
  await_registration({&ns}, BootstrapPhase::kNameServerUp);
  name_server_conn_ = conn_of_.at("ns");
  register_name(*entities_.front());  // gc, registered before the name server existed
}

void Topology::start_local_controllers() {
  TIERPROF_FUNCTION();
  std::vector<EntityHandle*> group;
  const Endpoint gc = listen_of_.at("gc");
  for (int z = 0; z < config_.zones; ++z) {
    for (int s = 0; s < config_.sites_per_zone; ++s) {
      EntityHandle& lc = add_entity(fmt::format("lc.{}.{}", z, s), NodeRole::kLocalController, z,
                                    s, static_cast<int>(group.size()));
      lc.spec.parent = gc;
      spawn_entity(lc);
      group.push_back(&lc);
    }
  }
  if (config_.post_start_sleep.local_controller > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.local_controller));
  }
  await_registration(group, BootstrapPhase::kLocalControllersUp);
}

void Topology::start_workflow_managers() {
  TIERPROF_FUNCTION();
  std::vector<EntityHandle*> group;
  const Endpoint gc = listen_of_.at("gc");
  for (int z = 0; z < config_.zones; ++z) {
    for (int n = 0; n < config_.workflows_per_zone; ++n) {
      EntityHandle& wm =
          add_entity(fmt::format("wm.{}.{}", z, n), NodeRole::kWorkflowManager, z, 0, n);
      wm.spec.parent = gc;
      spawn_entity(wm);
      group.push_back(&wm);
    }
  }
  if (config_.post_start_sleep.workflow_manager > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.workflow_manager));
  }
  await_registration(group, BootstrapPhase::kWorkflowManagersUp);
}

void Topology::start_hosts() {
  TIERPROF_FUNCTION();
  std::vector<EntityHandle*> group;
  for (int z = 0; z < config_.zones; ++z) {
    for (int s = 0; s < config_.sites_per_zone; ++s) {
      const Endpoint lc = listen_of_.at(fmt::format("lc.{}.{}", z, s));
      for (int n = 0; n < config_.hosts_per_site; ++n) {
        EntityHandle& host =
            add_entity(fmt::format("host.{}.{}.{}", z, s, n), NodeRole::kHostNode, z, s, n);
        host.spec.parent = lc;
        spawn_entity(host);
        group.push_back(&host);
      }
    }
  }
  if (!group.empty() && config_.post_start_sleep.host_group > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.host_group));
  }
  await_registration(group, BootstrapPhase::kHostsUp);
}

void Topology::start_client_host() {
  TIERPROF_FUNCTION();
  EntityHandle& client = add_entity("client", NodeRole::kClientHost, 0, 0, 0);
  client.spec.name_server = listen_of_.at("ns");
  spawn_entity(client);
  if (config_.post_start_sleep.client_host > 0) {
    instrument_sleep(seconds_to_ns(config_.post_start_sleep.client_host));
  }
  await_registration({&client}, BootstrapPhase::kClientsUp);
}

void Topology::spawn_entity(EntityHandle& handle) {
  TIERPROF_FUNCTION();
  handle.spawn_ns = wall_now_ns();
  if (options_.mode == LaunchMode::kThread) {
    EntityHandle* h = &handle;
    handle.thread = std::thread([this, h] {
      h->result = run_entity(h->spec, config_, &h->abort);
      h->exit_ns = wall_now_ns();
      h->finished = true;
    });
    return;
  }

  std::vector<std::string> env = entity_environment(handle.spec);
  env.insert(env.end(), options_.extra_env.begin(), options_.extra_env.end());
  std::set<std::string> overridden;
  for (const std::string& entry : env) overridden.insert(env_key(entry));
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    if (overridden.count(env_key(entry)) == 0) env.push_back(entry);
  }
  std::vector<char*> envp;
  for (std::string& entry : env) envp.push_back(entry.data());
  envp.push_back(nullptr);

  const std::string binary = options_.entity_binary.string();
  const std::string log = (options_.run_dir / (handle.spec.name + ".log")).string();
  std::string subcommand = "entity";
  std::vector<char*> argv = {const_cast<char*>(binary.c_str()), subcommand.data(), nullptr};

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  pid_t pid = 0;
  const int rc =
      posix_spawn(&pid, binary.c_str(), &actions, nullptr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::kEntitySpawnFailed,
                fmt::format("{} ({}): {}", handle.spec.name, to_string(handle.spec.role),
                            std::strerror(rc)));
  }
  handle.pid = pid;
}

void Topology::await_registration(const std::vector<EntityHandle*>& group, BootstrapPhase phase) {
  TIERPROF_FUNCTION();
  const EntityHandle* early_exit = nullptr;
  auto exited = [&](EntityHandle& h) {
    if (options_.mode == LaunchMode::kThread) return h.finished.load();
    if (h.reaped) return true;
    int status = 0;
    rusage usage{};
    if (::wait4(h.pid, &status, WNOHANG, &usage) == h.pid) {
      h.reaped = true;
      h.exit_ns = wall_now_ns();
      h.exit_status = decode_status(status);
      h.coarse = breakdown_from_rusage(usage, static_cast<double>(h.exit_ns - h.spawn_ns) / 1e9);
      return true;
    }
    return false;
  };
  auto done = [&] {
    bool all = true;
    for (EntityHandle* h : group) {
      if (h->registered) continue;
      all = false;
      if (exited(*h)) {
        early_exit = h;
        return true;
      }
    }
    return all;
  };
  loop_.run_until(done, config_.bootstrap_deadline, config_.poll_timeout_ms);
  if (early_exit != nullptr) {
    std::string why;
    if (early_exit->result && !early_exit->result->error.empty()) {
      why = ": " + early_exit->result->error;
    }
    throw Error(ErrorCode::kEntitySpawnFailed,
                fmt::format("{} ({}) exited during bootstrap{}", early_exit->spec.name,
                            to_string(early_exit->spec.role), why));
  }
  for (EntityHandle* h : group) {
    if (!h->registered) {
      throw Error(ErrorCode::kBootstrapTimeout,
                  fmt::format("phase {} timed out waiting for {}", to_string(phase), h->spec.name));
    }
  }
}

void Topology::register_name(const EntityHandle& handle) {
  if (!name_server_conn_) return;
  const auto it = listen_of_.find(handle.spec.name);
  if (it == listen_of_.end()) return;
  Message m{MsgType::kRegister, {}, 0, {}};
  m.set("name", handle.spec.name).set("addr", it->second.to_string());
  loop_.send(*name_server_conn_, std::move(m));
}

void Topology::handle(ConnId from, const Message& m) {
  TIERPROF_FUNCTION();
  switch (m.type) {
    case MsgType::kRegister: {
      EntityHandle* h = nullptr;
      for (auto& e : entities_) {
        if (e->spec.name == m.sender) h = e.get();
      }
      if (h == nullptr) return;
      h->registered = true;
      conn_of_[h->spec.name] = from;
      const int port = m.has("port") ? std::stoi(m.get("port")) : 0;
      if (port > 0) listen_of_[h->spec.name] = Endpoint{kLoopback, static_cast<std::uint16_t>(port)};
      const bool sited =
          h->spec.role == NodeRole::kLocalController || h->spec.role == NodeRole::kHostNode;
      liveness_.watch(h->spec.name, h->spec.role,
                      sited ? site_key(h->spec.zone, h->spec.site) : std::string(),
                      wall_now_ns());
      loop_.send(from, Message{MsgType::kRegisterAck, {}, 0, {}});
      if (h->spec.role == NodeRole::kLocalController ||
          h->spec.role == NodeRole::kWorkflowManager) {
        register_name(*h);
      }
      break;
    }
    case MsgType::kHeartbeat:
      ++heartbeats_;
      liveness_.heartbeat(m.sender, wall_now_ns());
      break;
    default: break;
  }
}

void Topology::check_liveness() {
  TIERPROF_FUNCTION_TAGGED(TimeCategory::kHeartbeat);
  liveness_.check(wall_now_ns());
}

LoopStats Topology::monitor(double seconds) {
  TIERPROF_FUNCTION();
  if (phase_ != BootstrapPhase::kRunning) {
    throw Error(ErrorCode::kConfig, "monitor() needs a bootstrapped topology");
  }
  return loop_.run_for(seconds, config_.poll_timeout_ms);
}

void Topology::kill(const std::string& name) {
  EntityHandle* h = nullptr;
  for (auto& e : entities_) {
    if (e->spec.name == name) h = e.get();
  }
  if (h == nullptr) throw Error(ErrorCode::kProcessNotFound, "no entity named " + name);
  h->killed_ns = wall_now_ns();
  if (options_.mode == LaunchMode::kThread) {
    h->abort = true;
  } else if (h->pid > 0 && !h->reaped) {
    ::kill(h->pid, SIGKILL);
  }
}

void Topology::shutdown() {
  if (shut_down_) return;
  if (phase_ != BootstrapPhase::kIdle) shutdown_entities();
  reap_entities(kReapSeconds);
  shut_down_ = true;
}

void Topology::shutdown_entities() {
  TIERPROF_FUNCTION();
  auto tell = [&](const std::string& name) {
    const auto it = conn_of_.find(name);
    if (it != conn_of_.end()) loop_.send(it->second, Message{MsgType::kShutdown, {}, 0, {}});
  };
  auto gone = [&](const std::string& name) {
    const EntityHandle* h = find(name);
    if (h == nullptr || closed_.count(name) != 0 || h->reaped || h->finished) return true;
    return conn_of_.count(name) == 0;
  };
  // The client drains its outstanding requests while the managers still serve.
  if (find("client") != nullptr) {
    tell("client");
    loop_.run_until([&] { return gone("client"); }, kClientDrainSeconds, config_.poll_timeout_ms);
  }
  for (const auto& h : entities_) {
    if (h->spec.name != "client") tell(h->spec.name);
  }
  loop_.run_until(
      [&] {
        for (const auto& h : entities_) {
          if (!gone(h->spec.name)) return false;
        }
        return true;
      },
      kShutdownSeconds, config_.poll_timeout_ms);
}

void Topology::reap_entities(double timeout_s) {
  TIERPROF_FUNCTION();
  if (options_.mode == LaunchMode::kThread) {
    const std::int64_t deadline = wall_now_ns() + static_cast<std::int64_t>(timeout_s * 1e9);
    for (auto& h : entities_) {
      while (!h->finished && wall_now_ns() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
      if (!h->finished) h->abort = true;
      if (h->thread.joinable()) h->thread.join();
    }
    return;
  }
  const std::int64_t deadline = wall_now_ns() + static_cast<std::int64_t>(timeout_s * 1e9);
  bool forced = false;
  for (;;) {
    bool pending = false;
    for (auto& h : entities_) {
      if (h->pid <= 0 || h->reaped) continue;
      int status = 0;
      rusage usage{};
      if (::wait4(h->pid, &status, WNOHANG, &usage) == h->pid) {
        h->reaped = true;
        h->exit_ns = wall_now_ns();
        h->exit_status = decode_status(status);
        h->coarse =
            breakdown_from_rusage(usage, static_cast<double>(h->exit_ns - h->spawn_ns) / 1e9);
      } else {
        pending = true;
      }
    }
    if (!pending) break;
    if (!forced && wall_now_ns() >= deadline) {
      for (auto& h : entities_) {
        if (h->pid > 0 && !h->reaped) ::kill(h->pid, SIGKILL);
      }
      forced = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  for (auto& h : entities_) {
    if (const auto text = read_file(options_.run_dir / (h->spec.name + ".result"))) {
      try {
        h->result = result_from_text(*text);
      } catch (const Error&) {
        // A truncated result file (killed mid-write) is treated as missing.
      }
    }
  }
}

std::vector<const EntityHandle*> Topology::entities() const {
  std::vector<const EntityHandle*> out;
  for (const auto& h : entities_) out.push_back(h.get());
  return out;
}

const EntityHandle* Topology::find(std::string_view name) const {
  for (const auto& h : entities_) {
    if (h->spec.name == name) return h.get();
  }
  return nullptr;
}

std::map<NodeRole, int> Topology::role_counts() const {
  std::map<NodeRole, int> counts{{NodeRole::kGlobalManager, 1}};
  for (const auto& h : entities_) ++counts[h->spec.role];
  return counts;
}

}  // namespace tierprof
