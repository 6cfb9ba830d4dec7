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

#include "tierprof/entity.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <random>
#include <set>

#include "text_util.h"
#include "tierprof/clock.h"
#include "tierprof/error.h"
#include "tierprof/instrumentation.h"
#include "tierprof/workflow.h"

namespace tierprof {

namespace {

// Upper bound for one serve() call; the loop normally ends on Shutdown.
constexpr double kForever = 7 * 24 * 3600.0;
constexpr double kDrainSeconds = 2.0;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const std::string& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  for (std::string_view part : detail::split(text, ',')) out.emplace_back(part);
  return out;
}

double quantile_ms(std::vector<std::int64_t>& sorted_ns, double q) {
  if (sorted_ns.empty()) return 0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted_ns.size())));
  const std::size_t index = std::min(sorted_ns.size() - 1, rank == 0 ? 0 : rank - 1);
  return static_cast<double>(sorted_ns[index]) / 1e6;
}

class Entity {
 public:
  Entity(const EntitySpec& spec, const ScenarioConfig& config)
      : spec_(spec), config_(config), loop_(spec.name) {}
  virtual ~Entity() = default;

  EntityResult run(const std::atomic<bool>* abort) {
    EntityResult result;
    result.name = spec_.name;
    result.role = spec_.role;
    loop_.set_abort_flag(abort);
    try {
      serve();
      result.clean_exit = true;
    } catch (const Error& e) {
      result.error = e.code() == ErrorCode::kTargetTerminated ? "aborted" : e.what();
    }
    result.loop = loop_.totals();
    for (std::size_t i = 0; i < kMsgTypeCount; ++i) {
      const auto type = static_cast<MsgType>(i);
      result.counters[fmt::format("sent.{}", to_string(type))] = loop_.sent(type);
      result.counters[fmt::format("received.{}", to_string(type))] = loop_.received(type);
    }
    result.counters["seq_violations"] = loop_.seq_violations();
    finish(result);
    return result;
  }

 protected:
  void serve() {
    TIERPROF_FUNCTION();
    std::uint16_t port = 0;
    if (role_listens(spec_.role)) port = loop_.listen(spec_.listen_port);
    loop_.on_message([this](ConnId from, const Message& m) { handle_message(from, m); });
    manager_ = loop_.connect(spec_.manager, config_.bootstrap_deadline, true);
    Message reg{MsgType::kRegister, {}, 0, {}};
    reg.set("role", std::string(to_string(spec_.role)))
        .set("port", std::to_string(port))
        .set("zone", std::to_string(spec_.zone))
        .set("site", std::to_string(spec_.site));
    loop_.send(manager_, std::move(reg));
    loop_.run_until([this] { return registered_; }, config_.bootstrap_deadline,
                    config_.poll_timeout_ms);
    if (!registered_) {
      throw Error(ErrorCode::kBootstrapTimeout, spec_.name + ": no RegisterAck from manager");
    }
    if (spec_.parent) {
      parent_ = loop_.connect(*spec_.parent, config_.bootstrap_deadline, false);
      Message up{MsgType::kRegister, {}, 0, {}};
      up.set("role", std::string(to_string(spec_.role)));
      loop_.send(*parent_, std::move(up));
    }
    loop_.every(config_.heartbeat_interval, [this] { send_heartbeat(); });
    start();
    while (!done_) {
      loop_.run_until([this] { return done_; }, kForever, config_.poll_timeout_ms);
    }
    drain();
    loop_.flush(1.0);
  }

  void handle_message(ConnId from, const Message& m) {
    TIERPROF_FUNCTION();
    if (from == manager_) {
      if (m.type == MsgType::kRegisterAck) {
        registered_ = true;
        return;
      }
      if (m.type == MsgType::kShutdown) {
        on_shutdown();
        return;
      }
    }
    handle(from, m);
  }

  void send_heartbeat() {
    TIERPROF_FUNCTION_TAGGED(TimeCategory::kHeartbeat);
    loop_.send(manager_, Message{MsgType::kHeartbeat, {}, 0, {}});
    if (parent_ && spec_.role == NodeRole::kHostNode) {
      if (!loop_.send(*parent_, Message{MsgType::kHeartbeat, {}, 0, {}})) parent_.reset();
    }
  }

  void ack(ConnId to, Message reply = Message{MsgType::kRegisterAck, {}, 0, {}}) {
    reply.type = MsgType::kRegisterAck;
    loop_.send(to, std::move(reply));
  }

  virtual void start() {}
  virtual void handle(ConnId, const Message&) {}
  virtual void on_shutdown() { done_ = true; }
  // Runs after Shutdown, before the final flush.
  virtual void drain() {}
  virtual void finish(EntityResult&) {}

  const EntitySpec& spec_;
  const ScenarioConfig& config_;
  EventLoop loop_;
  ConnId manager_ = 0;
  std::optional<ConnId> parent_;
  bool registered_ = false;
  bool done_ = false;
};

class GlobalController final : public Entity {
 public:
  using Entity::Entity;

 protected:
  void handle(ConnId from, const Message& m) override {
    TIERPROF_FUNCTION();
    switch (m.type) {
      case MsgType::kRegister:
        ++registrations_;
        ack(from);
        break;
      case MsgType::kCommissionWorkflow: ++commissioned_; break;
      case MsgType::kDecommissionWorkflow: ++decommissioned_; break;
      default: break;
    }
  }
  void finish(EntityResult& r) override {
    r.counters["registrations"] = registrations_;
    r.counters["workflows_commissioned"] = commissioned_;
    r.counters["workflows_decommissioned"] = decommissioned_;
  }

 private:
  std::uint64_t registrations_ = 0;
  std::uint64_t commissioned_ = 0;
  std::uint64_t decommissioned_ = 0;
};

class NameServer final : public Entity {
 public:
  using Entity::Entity;

 protected:
  void handle(ConnId from, const Message& m) override {
    if (m.type == MsgType::kRegister && m.has("name")) {
      names_[m.get("name")] = m.get("addr");
    } else if (m.type == MsgType::kNameLookup) {
      answer_lookup(from, m.get("prefix"));
    }
  }
  void answer_lookup(ConnId to, const std::string& prefix) {
    TIERPROF_FUNCTION();
    std::vector<std::string> entries;
    for (const auto& [name, addr] : names_) {
      if (name.compare(0, prefix.size(), prefix) == 0) entries.push_back(name + "=" + addr);
    }
    Message answer{MsgType::kNameAnswer, {}, 0, {}};
    answer.set("prefix", prefix).set("entries", join(entries));
    loop_.send(to, std::move(answer));
  }
  void finish(EntityResult& r) override { r.counters["names"] = names_.size(); }

 private:
  std::map<std::string, std::string> names_;
};

class LocalController final : public Entity {
 public:
  using Entity::Entity;

 protected:
  void handle(ConnId from, const Message& m) override {
    if (m.type == MsgType::kRegister) {
      ++hosts_;
      ack(from);
    } else if (m.type == MsgType::kHeartbeat) {
      track_heartbeat();
    }
  }
  void track_heartbeat() {
    TIERPROF_FUNCTION_TAGGED(TimeCategory::kHeartbeat);
    ++host_heartbeats_;
  }
  void finish(EntityResult& r) override {
    r.counters["hosts"] = hosts_;
    r.counters["host_heartbeats"] = host_heartbeats_;
  }

 private:
  std::uint64_t hosts_ = 0;
  std::uint64_t host_heartbeats_ = 0;
};

class HostNode final : public Entity {
 public:
  using Entity::Entity;
};

class WorkflowManager final : public Entity {
 public:
  WorkflowManager(const EntitySpec& spec, const ScenarioConfig& config)
      : Entity(spec, config), pool_(spec.name, spec.zone) {
    pool_.commission();
  }

 protected:
  void start() override {
    loop_.every(config_.workflow_adjust_interval, [this] { adjust_load(); });
  }

  void handle(ConnId from, const Message& m) override {
    switch (m.type) {
      case MsgType::kRegister: {
        clients_.insert(from);
        Message reply{MsgType::kRegisterAck, {}, 0, {}};
        reply.set("active", join(pool_.active_ids()));
        ack(from, std::move(reply));
        break;
      }
      case MsgType::kClientRequest: handle_client_request(from, m); break;
      default: break;
    }
  }

  void handle_client_request(ConnId from, const Message& m) {
    TIERPROF_FUNCTION();
    const auto served = pool_.route(m.get("instance"));
    Message reply{MsgType::kClientReply, {}, 0, {}};
    reply.set("req", m.get("req")).set("instance", served.value_or(""));
    loop_.send(from, std::move(reply));
  }

  void adjust_load() {
    TIERPROF_FUNCTION();
    const double load = pool_.close_window(config_.workflow_adjust_interval);
    const WorkflowThresholds thresholds{config_.workflow_load_high, config_.workflow_load_low};
    for (WorkflowAction action : adjust_workflows(load, pool_.active_count(), thresholds)) {
      Message notice{MsgType::kCommissionWorkflow, {}, 0, {}};
      if (action == WorkflowAction::kCommission) {
        notice.set("instance", pool_.commission());
      } else {
        const auto id = pool_.decommission();
        if (!id) continue;
        notice.type = MsgType::kDecommissionWorkflow;
        notice.set("instance", *id);
      }
      if (parent_) loop_.send(*parent_, notice);
      for (ConnId c : clients_) loop_.send(c, notice);
    }
  }

  void finish(EntityResult& r) override {
    for (const WorkflowInstance& w : pool_.instances()) r.instance_requests[w.id] = w.requests;
    r.counters["instances"] = pool_.instances().size();
    r.counters["rerouted"] = pool_.rerouted();
  }

 private:
  WorkflowPool pool_;
  std::set<ConnId> clients_;
};

class ClientHost final : public Entity {
 public:
  ClientHost(const EntitySpec& spec, const ScenarioConfig& config)
      : Entity(spec, config),
        planned_(planned_requests(config.client_users, config.client_rate, config.run_duration)),
        rng_(spec.seed) {}

 protected:
  void start() override {
    if (!spec_.name_server) throw Error(ErrorCode::kConfig, "client host needs a name server");
    ns_ = loop_.connect(*spec_.name_server, config_.bootstrap_deadline, false);
    Message lookup{MsgType::kNameLookup, {}, 0, {}};
    lookup.set("prefix", "wm.");
    loop_.send(*ns_, std::move(lookup));
  }

  void handle(ConnId from, const Message& m) override {
    switch (m.type) {
      case MsgType::kNameAnswer: connect_workflow_managers(m); break;
      case MsgType::kRegisterAck: {
        for (const std::string& id : split_list(m.get("active"))) {
          targets_.add(id);
          owner_[id] = from;
        }
        if (++acked_ == managers_ && !sending_) begin_sending();
        break;
      }
      case MsgType::kCommissionWorkflow:
        targets_.add(m.get("instance"));
        owner_[m.get("instance")] = from;
        break;
      case MsgType::kDecommissionWorkflow: targets_.remove(m.get("instance")); break;
      case MsgType::kClientReply: record_reply(m); break;
      default: break;
    }
  }

  void connect_workflow_managers(const Message& answer) {
    TIERPROF_FUNCTION();
    for (const std::string& entry : split_list(answer.get("entries"))) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) continue;
      const ConnId c = loop_.connect(Endpoint::parse(entry.substr(eq + 1)),
                                     config_.bootstrap_deadline, false);
      Message reg{MsgType::kRegister, {}, 0, {}};
      reg.set("role", std::string(to_string(NodeRole::kClientHost)));
      loop_.send(c, std::move(reg));
      ++managers_;
    }
    if (managers_ == 0) begin_sending();
  }

  void begin_sending() {
    sending_ = true;
    if (planned_ == 0) return;
    loop_.every(1.0 / config_.client_rate, [this] {
      if (sent_ < planned_) send_client_request();
    });
  }

  void send_client_request() {
    TIERPROF_FUNCTION();
    if (targets_.empty()) {
      throw Error(ErrorCode::kNoActiveWorkflow, spec_.name + ": no active workflow instance");
    }
    const std::string& instance = targets_.next();
    std::uniform_int_distribution<int> user(0, std::max(0, config_.client_users - 1));
    Message request{MsgType::kClientRequest, {}, 0, {}};
    request.set("user", std::to_string(user(rng_)))
        .set("instance", instance)
        .set("req", std::to_string(sent_));
    sent_at_.push_back(wall_now_ns());
    ++per_instance_[instance];
    ++sent_;
    loop_.send(owner_.at(instance), std::move(request));
  }

  void record_reply(const Message& m) {
    const auto req = detail::parse_number<std::uint64_t>(m.get("req"), "req");
    if (req >= sent_at_.size()) return;
    latencies_.push_back(wall_now_ns() - sent_at_[req]);
    ++answered_;
  }

  // Sends whatever the schedule has not issued yet, then waits for replies.
  void on_shutdown() override {
    TIERPROF_FUNCTION();
    if (planned_ > 0 && !sending_ && managers_ > 0) {
      throw Error(ErrorCode::kBootstrapTimeout, spec_.name + ": workflow managers never answered");
    }
    while (sent_ < planned_) send_client_request();
    done_ = true;
  }

  void drain() override {
    loop_.run_until([this] { return answered_ >= sent_; }, kDrainSeconds,
                    config_.poll_timeout_ms);
  }

  void finish(EntityResult& r) override {
    LoadReport load;
    load.planned = planned_;
    load.sent = sent_;
    load.answered = answered_;
    std::sort(latencies_.begin(), latencies_.end());
    load.latency_p50_ms = quantile_ms(latencies_, 0.50);
    load.latency_p90_ms = quantile_ms(latencies_, 0.90);
    load.latency_p99_ms = quantile_ms(latencies_, 0.99);
    load.per_instance = per_instance_;
    r.load = std::move(load);
  }

 private:
  const std::uint64_t planned_;
  std::mt19937_64 rng_;
  std::optional<ConnId> ns_;
  RoundRobin targets_;
  std::map<std::string, ConnId> owner_;
  std::size_t managers_ = 0;
  std::size_t acked_ = 0;
  bool sending_ = false;
  std::uint64_t sent_ = 0;
  std::uint64_t answered_ = 0;
  std::vector<std::int64_t> sent_at_;
  std::vector<std::int64_t> latencies_;
  std::map<std::string, std::uint64_t> per_instance_;
};

std::unique_ptr<Entity> make_entity(const EntitySpec& spec, const ScenarioConfig& config) {
  switch (spec.role) {
    case NodeRole::kGlobalController: return std::make_unique<GlobalController>(spec, config);
    case NodeRole::kNameServer: return std::make_unique<NameServer>(spec, config);
    case NodeRole::kLocalController: return std::make_unique<LocalController>(spec, config);
    case NodeRole::kWorkflowManager: return std::make_unique<WorkflowManager>(spec, config);
    case NodeRole::kHostNode: return std::make_unique<HostNode>(spec, config);
    case NodeRole::kClientHost: return std::make_unique<ClientHost>(spec, config);
    case NodeRole::kGlobalManager: break;
  }
  throw Error(ErrorCode::kConfig, "the global manager is not a spawnable entity");
}

std::string env_or(const char* key, std::string fallback = {}) {
  const char* value = std::getenv(key);
  return value ? std::string(value) : fallback;
}

std::string env_required(const char* key) {
  const char* value = std::getenv(key);
  if (!value) throw Error(ErrorCode::kConfig, std::string("missing environment variable ") + key);
  return value;
}

template <typename T>
T env_number(const char* key, T fallback) {
  const char* value = std::getenv(key);
  if (!value) return fallback;
  try {
    return detail::parse_number<T>(value, key);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
}

}  // namespace

bool role_listens(NodeRole role) {
  return role == NodeRole::kGlobalController || role == NodeRole::kNameServer ||
         role == NodeRole::kLocalController || role == NodeRole::kWorkflowManager;
}

std::string site_key(int zone, int site) { return fmt::format("{}.{}", zone, site); }

std::uint64_t planned_requests(int users, double rate, double duration_s) {
  if (users <= 0 || rate <= 0 || duration_s <= 0) return 0;
  return static_cast<std::uint64_t>(std::llround(rate * duration_s));
}

std::uint64_t EntityResult::counter(std::string_view key) const {
  const auto it = counters.find(std::string(key));
  return it == counters.end() ? 0 : it->second;
}

EntityResult run_entity(const EntitySpec& spec, const ScenarioConfig& config,
                        const std::atomic<bool>* abort) {
  Recorder::global().set_thread_name(spec.name);
  try {
    return make_entity(spec, config)->run(abort);
  } catch (const Error& e) {
    EntityResult result;
    result.name = spec.name;
    result.role = spec.role;
    result.error = e.what();
    return result;
  }
}

std::string result_to_text(const EntityResult& r) {
  std::string out;
  auto put = [&](std::string_view key, const auto& value) {
    out += fmt::format("{}\t{}\n", key, value);
  };
  put("name", detail::escape_field(r.name));
  put("role", to_string(r.role));
  put("clean_exit", r.clean_exit ? 1 : 0);
  put("error", detail::escape_field(r.error));
  put("loop.poll_invocations", r.loop.poll_invocations);
  put("loop.messages_handled", r.loop.messages_handled);
  put("loop.wall_in_poll_ns", r.loop.wall_in_poll_ns);
  put("loop.wall_total_ns", r.loop.wall_total_ns);
  for (const auto& [key, value] : r.counters) put("counter." + key, value);
  for (const auto& [key, value] : r.instance_requests) put("instance." + key, value);
  if (r.load) {
    put("load.planned", r.load->planned);
    put("load.sent", r.load->sent);
    put("load.answered", r.load->answered);
    put("load.latency_p50_ms", detail::format_double(r.load->latency_p50_ms));
    put("load.latency_p90_ms", detail::format_double(r.load->latency_p90_ms));
    put("load.latency_p99_ms", detail::format_double(r.load->latency_p99_ms));
    for (const auto& [key, value] : r.load->per_instance) put("load.target." + key, value);
  }
  return out;
}

EntityResult result_from_text(std::string_view text) {
  EntityResult r;
  auto u64 = [](std::string_view v) { return detail::parse_number<std::uint64_t>(v, "count"); };
  auto i64 = [](std::string_view v) { return detail::parse_number<std::int64_t>(v, "time"); };
  auto dbl = [](std::string_view v) { return detail::parse_number<double>(v, "latency"); };
  auto load = [&]() -> LoadReport& {
    if (!r.load) r.load.emplace();
    return *r.load;
  };
  for (std::string_view line : detail::split(text, '\n')) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw Error(ErrorCode::kParse, "result line without tab");
    const std::string_view key = line.substr(0, tab);
    const std::string_view value = line.substr(tab + 1);
    auto starts = [&](std::string_view prefix) { return key.substr(0, prefix.size()) == prefix; };
    if (key == "name") {
      r.name = detail::unescape_field(value);
    } else if (key == "role") {
      const auto role = parse_node_role(value);
      if (!role) throw Error(ErrorCode::kParse, "bad role in result");
      r.role = *role;
    } else if (key == "clean_exit") {
      r.clean_exit = value == "1";
    } else if (key == "error") {
      r.error = detail::unescape_field(value);
    } else if (key == "loop.poll_invocations") {
      r.loop.poll_invocations = u64(value);
    } else if (key == "loop.messages_handled") {
      r.loop.messages_handled = u64(value);
    } else if (key == "loop.wall_in_poll_ns") {
      r.loop.wall_in_poll_ns = i64(value);
    } else if (key == "loop.wall_total_ns") {
      r.loop.wall_total_ns = i64(value);
    } else if (starts("counter.")) {
      r.counters[std::string(key.substr(8))] = u64(value);
    } else if (starts("instance.")) {
      r.instance_requests[std::string(key.substr(9))] = u64(value);
    } else if (key == "load.planned") {
      load().planned = u64(value);
    } else if (key == "load.sent") {
      load().sent = u64(value);
    } else if (key == "load.answered") {
      load().answered = u64(value);
    } else if (key == "load.latency_p50_ms") {
      load().latency_p50_ms = dbl(value);
    } else if (key == "load.latency_p90_ms") {
      load().latency_p90_ms = dbl(value);
    } else if (key == "load.latency_p99_ms") {
      load().latency_p99_ms = dbl(value);
    } else if (starts("load.target.")) {
      load().per_instance[std::string(key.substr(12))] = u64(value);
    } else {
      throw Error(ErrorCode::kParse, "unknown result key '" + std::string(key) + "'");
    }
  }
  return r;
}

std::vector<std::string> entity_environment(const EntitySpec& spec) {
  std::vector<std::string> env = {
      "HOST_NAME=" + spec.name,
      "TIERPROF_ROLE=" + std::string(to_string(spec.role)),
      fmt::format("TIERPROF_ZONE={}", spec.zone),
      fmt::format("TIERPROF_SITE={}", spec.site),
      fmt::format("TIERPROF_INDEX={}", spec.index),
      "TIERPROF_MANAGER_ADDR=" + spec.manager.to_string(),
      fmt::format("TIERPROF_LISTEN_PORT={}", spec.listen_port),
      fmt::format("TIERPROF_SEED={}", spec.seed),
  };
  if (spec.parent) env.push_back("TIERPROF_PARENT_ADDR=" + spec.parent->to_string());
  if (spec.name_server) {
    env.push_back("NAME_SERVER_ADDR=" + spec.name_server->host);
    env.push_back(fmt::format("NAME_SERVER_UPDATE_PORT={}", spec.name_server->port));
  }
  return env;
}

EntitySpec entity_spec_from_environment() {
  EntitySpec spec;
  spec.name = env_required("HOST_NAME");
  const auto role = parse_node_role(env_required("TIERPROF_ROLE"));
  if (!role) throw Error(ErrorCode::kConfig, "bad TIERPROF_ROLE");
  spec.role = *role;
  spec.zone = env_number<int>("TIERPROF_ZONE", 0);
  spec.site = env_number<int>("TIERPROF_SITE", 0);
  spec.index = env_number<int>("TIERPROF_INDEX", 0);
  spec.manager = Endpoint::parse(env_required("TIERPROF_MANAGER_ADDR"));
  spec.listen_port = env_number<std::uint16_t>("TIERPROF_LISTEN_PORT", 0);
  spec.seed = env_number<std::uint64_t>("TIERPROF_SEED", 1);
  if (const std::string parent = env_or("TIERPROF_PARENT_ADDR"); !parent.empty()) {
    spec.parent = Endpoint::parse(parent);
  }
  if (const std::string ns = env_or("NAME_SERVER_ADDR"); !ns.empty()) {
    spec.name_server = Endpoint{ns, env_number<std::uint16_t>("NAME_SERVER_UPDATE_PORT", 0)};
  }
  return spec;
}

}  // namespace tierprof
