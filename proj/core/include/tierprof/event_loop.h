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

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tierprof/net.h"
#include "tierprof/wire.h"

namespace tierprof {

struct LoopStats {
  std::uint64_t poll_invocations = 0;
  std::uint64_t messages_handled = 0;
  std::int64_t wall_in_poll_ns = 0;
  std::int64_t wall_total_ns = 0;

  double poll_share() const {
    return wall_total_ns > 0
               ? static_cast<double>(wall_in_poll_ns) / static_cast<double>(wall_total_ns)
               : 0.0;
  }
  LoopStats& operator+=(const LoopStats& other);
};

using ConnId = std::uint64_t;

// Single-threaded poll loop over non-blocking loopback stream sockets. Each
// iteration blocks in one poll call (recorded as the IoWaitPoll-tagged
// "{poll}" builtin inside a line-level region), then accepts, reads, decodes
// and dispatches frames, flushes pending writes and runs due timers. Timers
// never shorten the poll timeout, so they may fire up to one timeout late.
class EventLoop {
 public:
  using MessageHandler = std::function<void(ConnId, const Message&)>;
  using ConnHandler = std::function<void(ConnId)>;

  explicit EventLoop(std::string name);
  ~EventLoop();
  EventLoop(const EventLoop&) = delete;
  EventLoop& operator=(const EventLoop&) = delete;

  const std::string& name() const { return name_; }

  // Returns the bound port. Throws Error(kPortUnavailable).
  std::uint16_t listen(std::uint16_t port);
  // Closing an essential connection makes run_for/run_until throw
  // Error(kSocketClosed).
  ConnId connect(const Endpoint& endpoint, double timeout_s, bool essential = false);
  void set_essential(ConnId id, bool essential);

  // Stamps sender and the per-type sequence number, then queues the frame.
  // Sending on a closed connection is a no-op that returns false.
  bool send(ConnId id, Message message);
  void close(ConnId id);
  bool connected(ConnId id) const { return conns_.count(id) != 0; }
  std::vector<ConnId> connections() const;

  void on_message(MessageHandler handler) { on_message_ = std::move(handler); }
  void on_accept(ConnHandler handler) { on_accept_ = std::move(handler); }
  void on_close(ConnHandler handler) { on_close_ = std::move(handler); }

  // Runs `fn` every `interval_s`, first after one interval.
  void every(double interval_s, std::function<void()> fn);

  // Runs the loop for `seconds` (the last poll is cut short at the deadline).
  // A zero duration does nothing.
  LoopStats run_for(double seconds, double timeout_ms);
  // Runs until `done()` holds, stop() is called, or `seconds` pass.
  LoopStats run_until(const std::function<bool()>& done, double seconds, double timeout_ms);
  void stop() { stop_ = true; }

  // Blocks until every queued byte is written or `timeout_s` passes.
  void flush(double timeout_s);

  // When the flag becomes true the loop throws Error(kTargetTerminated)
  // at its next iteration: the in-process stand-in for SIGKILL.
  void set_abort_flag(const std::atomic<bool>* flag) { abort_ = flag; }

  const LoopStats& totals() const { return totals_; }
  std::uint64_t sent(MsgType type) const { return sent_[static_cast<std::size_t>(type)]; }
  std::uint64_t received(MsgType type) const { return received_[static_cast<std::size_t>(type)]; }
  // Frames whose seq did not exceed the previous one from the same
  // (sender, msg_type); they are still dispatched.
  std::uint64_t seq_violations() const { return seq_violations_; }

 private:
  struct Connection {
    UniqueFd fd;
    FrameDecoder decoder;
    std::string out;
    std::size_t out_offset = 0;
    bool essential = false;
  };
  struct Timer {
    std::int64_t interval_ns;
    std::int64_t next_ns;
    std::function<void()> fn;
  };

  LoopStats poll_loop(const std::function<bool()>* done, std::int64_t deadline_ns,
                      double timeout_ms);
  ConnId add(UniqueFd fd, bool essential);
  void accept_connections();
  void read_from(ConnId id);
  bool write_to(Connection& conn);
  void drop(ConnId id);
  void run_timers(std::int64_t now);

  std::string name_;
  UniqueFd listener_;
  std::map<ConnId, Connection> conns_;
  ConnId next_id_ = 1;
  MessageHandler on_message_;
  ConnHandler on_accept_;
  ConnHandler on_close_;
  std::vector<Timer> timers_;
  bool stop_ = false;
  bool essential_lost_ = false;
  std::string essential_lost_what_;
  const std::atomic<bool>* abort_ = nullptr;
  LoopStats totals_;
  std::array<std::uint64_t, kMsgTypeCount> next_seq_{};
  std::array<std::uint64_t, kMsgTypeCount> sent_{};
  std::array<std::uint64_t, kMsgTypeCount> received_{};
  std::map<std::pair<std::string, MsgType>, std::uint64_t> last_seq_;
  std::uint64_t seq_violations_ = 0;
};

}  // namespace tierprof
