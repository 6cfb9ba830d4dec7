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

#include "tierprof/event_loop.h"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "tierprof/clock.h"
#include "tierprof/error.h"
#include "tierprof/instrumentation.h"

namespace tierprof {

namespace {

SiteHandle builtin(std::string_view symbol, std::optional<TimeCategory> tag) {
  return Recorder::global().intern(
      {std::string(kBuiltinFile), 0, std::string(symbol), SiteKind::kBuiltin}, tag);
}

SiteHandle region(int line, std::string_view text, std::optional<TimeCategory> tag) {
  return Recorder::global().intern(
      {std::string(source_basename(__FILE__)), line, std::string(text), SiteKind::kRegion}, tag);
}

timespec to_timespec(std::int64_t ns) {
  timespec ts{};
  ts.tv_sec = static_cast<time_t>(ns / 1'000'000'000);
  ts.tv_nsec = static_cast<long>(ns % 1'000'000'000);
  return ts;
}

}  // namespace

LoopStats& LoopStats::operator+=(const LoopStats& o) {
  poll_invocations += o.poll_invocations;
  messages_handled += o.messages_handled;
  wall_in_poll_ns += o.wall_in_poll_ns;
  wall_total_ns += o.wall_total_ns;
  return *this;
}

EventLoop::EventLoop(std::string name) : name_(std::move(name)) {}

EventLoop::~EventLoop() = default;

std::uint16_t EventLoop::listen(std::uint16_t port) {
  std::uint16_t bound = 0;
  listener_ = listen_tcp(port, &bound);
  return bound;
}

ConnId EventLoop::add(UniqueFd fd, bool essential) {
  const ConnId id = next_id_++;
  Connection& c = conns_[id];
  c.fd = std::move(fd);
  c.essential = essential;
  return id;
}

ConnId EventLoop::connect(const Endpoint& endpoint, double timeout_s, bool essential) {
  return add(connect_tcp(endpoint, timeout_s), essential);
}

void EventLoop::set_essential(ConnId id, bool essential) {
  if (auto it = conns_.find(id); it != conns_.end()) it->second.essential = essential;
}

std::vector<ConnId> EventLoop::connections() const {
  std::vector<ConnId> ids;
  for (const auto& [id, c] : conns_) ids.push_back(id);
  return ids;
}

bool EventLoop::send(ConnId id, Message message) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return false;
  const auto type = static_cast<std::size_t>(message.type);
  message.sender = name_;
  message.seq = ++next_seq_[type];
  ++sent_[type];
  Connection& c = it->second;
  c.out += encode_frame(message);
  if (!write_to(c)) {
    drop(id);
    return false;
  }
  return true;
}

void EventLoop::close(ConnId id) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return;
  write_to(it->second);
  conns_.erase(it);
}

void EventLoop::drop(ConnId id) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return;
  if (it->second.essential) {
    essential_lost_ = true;
    essential_lost_what_ = name_ + ": essential connection closed by peer";
  }
  conns_.erase(it);
  if (on_close_) on_close_(id);
}

bool EventLoop::write_to(Connection& c) {
  static const SiteHandle send_site = builtin("send", TimeCategory::kKernel);
  static const SiteHandle send_region =
      region(__LINE__ + 5, "n = send(fd, out)", TimeCategory::kKernel);
  while (c.out_offset < c.out.size()) {
    ssize_t n;
    {
      ScopedBuiltin scope(Recorder::global(), send_region, send_site);
      n = ::send(c.fd.get(), c.out.data() + c.out_offset, c.out.size() - c.out_offset,
                 MSG_NOSIGNAL | MSG_DONTWAIT);
    }
    if (n > 0) {
      c.out_offset += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
    if (n < 0 && errno == EINTR) continue;
    return false;
  }
  c.out.clear();
  c.out_offset = 0;
  return true;
}

void EventLoop::accept_connections() {
  static const SiteHandle accept_site = builtin("accept", TimeCategory::kKernel);
  static const SiteHandle accept_region =
      region(__LINE__ + 5, "fd = accept(listener)", TimeCategory::kKernel);
  while (true) {
    int fd;
    {
      ScopedBuiltin scope(Recorder::global(), accept_region, accept_site);
      fd = ::accept4(listener_.get(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
    }
    if (fd < 0) return;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    const ConnId id = add(UniqueFd(fd), false);
    if (on_accept_) on_accept_(id);
  }
}

void EventLoop::read_from(ConnId id) {
  static const SiteHandle recv_site = builtin("recv", TimeCategory::kKernel);
  static const SiteHandle recv_region =
      region(__LINE__ + 8, "n = recv(fd, buffer)", TimeCategory::kKernel);
  char buffer[16384];
  while (true) {
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    ssize_t n;
    {
      ScopedBuiltin scope(Recorder::global(), recv_region, recv_site);
      n = ::recv(it->second.fd.get(), buffer, sizeof buffer, MSG_DONTWAIT);
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
    if (n <= 0) {
      drop(id);
      return;
    }
    it->second.decoder.append(std::string_view(buffer, static_cast<std::size_t>(n)));
    while (true) {
      auto conn = conns_.find(id);
      if (conn == conns_.end()) return;
      std::optional<Message> m;
      try {
        m = conn->second.decoder.next();
      } catch (const Error&) {
        drop(id);  // a peer speaking garbage is treated as gone
        return;
      }
      if (!m) break;
      const auto type = static_cast<std::size_t>(m->type);
      ++received_[type];
      ++totals_.messages_handled;
      auto [last, fresh] = last_seq_.try_emplace({m->sender, m->type}, m->seq);
      if (!fresh) {
        if (m->seq <= last->second) ++seq_violations_;
        last->second = std::max(last->second, m->seq);
      }
      if (on_message_) on_message_(id, *m);
    }
  }
}

void EventLoop::every(double interval_s, std::function<void()> fn) {
  const auto interval = static_cast<std::int64_t>(interval_s * 1e9);
  timers_.push_back({interval, wall_now_ns() + interval, std::move(fn)});
}

void EventLoop::run_timers(std::int64_t now) {
  for (std::size_t i = 0; i < timers_.size(); ++i) {
    if (now < timers_[i].next_ns) continue;
    // Fixed rate without bursts: a late timer fires once and realigns.
    timers_[i].next_ns += timers_[i].interval_ns;
    if (timers_[i].next_ns <= now) timers_[i].next_ns = now + timers_[i].interval_ns;
    timers_[i].fn();
  }
}

LoopStats EventLoop::run_for(double seconds, double timeout_ms) {
  if (seconds <= 0) return {};
  return poll_loop(nullptr, wall_now_ns() + static_cast<std::int64_t>(seconds * 1e9), timeout_ms);
}

LoopStats EventLoop::run_until(const std::function<bool()>& done, double seconds,
                               double timeout_ms) {
  if (done()) return {};
  return poll_loop(&done, wall_now_ns() + static_cast<std::int64_t>(seconds * 1e9), timeout_ms);
}

LoopStats EventLoop::poll_loop(const std::function<bool()>* done, std::int64_t deadline_ns,
                               double timeout_ms) {
  TIERPROF_FUNCTION();
  static const SiteHandle poll_builtin = builtin("poll", TimeCategory::kIoWaitPoll);
  const auto timeout_ns = static_cast<std::int64_t>(std::llround(timeout_ms * 1e6));
  LoopStats stats;
  const std::int64_t start = wall_now_ns();
  const std::uint64_t handled_before = totals_.messages_handled;
  stop_ = false;
  std::vector<pollfd> fds;
  std::vector<ConnId> ids;

  while (!stop_) {
    if (abort_ && abort_->load(std::memory_order_relaxed)) {
      throw Error(ErrorCode::kTargetTerminated, name_ + ": aborted");
    }
    if (essential_lost_) {
      essential_lost_ = false;
      throw Error(ErrorCode::kSocketClosed, essential_lost_what_);
    }
    if (done && (*done)()) break;
    const std::int64_t now = wall_now_ns();
    if (now >= deadline_ns) break;

    fds.clear();
    ids.clear();
    if (listener_) fds.push_back({listener_.get(), POLLIN, 0});
    for (const auto& [id, c] : conns_) {
      const short events = static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT));
      fds.push_back({c.fd.get(), events, 0});
      ids.push_back(id);
    }
    const timespec ts = to_timespec(std::min(timeout_ns, deadline_ns - now));

    static const SiteHandle poll_region =
        region(__LINE__ + 5, "readable = poll(fds, timeout)", TimeCategory::kIoWaitPoll);
    int ready;
    const std::int64_t before = wall_now_ns();
    {
      ScopedBuiltin scope(Recorder::global(), poll_region, poll_builtin);
      ready = ::ppoll(fds.data(), fds.size(), &ts, nullptr);
    }
    stats.wall_in_poll_ns += wall_now_ns() - before;
    ++stats.poll_invocations;
    if (ready < 0 && errno != EINTR) throw Error(ErrorCode::kIo, std::strerror(errno));

    if (ready > 0) {
      std::size_t offset = 0;
      if (listener_) {
        if (fds[0].revents & POLLIN) accept_connections();
        offset = 1;
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const short revents = fds[i + offset].revents;
        if (revents & POLLOUT) {
          auto it = conns_.find(ids[i]);
          if (it != conns_.end() && !write_to(it->second)) drop(ids[i]);
        }
        if (revents & (POLLIN | POLLHUP | POLLERR)) read_from(ids[i]);
      }
    }
    run_timers(wall_now_ns());
  }
  stats.wall_total_ns = wall_now_ns() - start;
  totals_.poll_invocations += stats.poll_invocations;
  totals_.wall_in_poll_ns += stats.wall_in_poll_ns;
  totals_.wall_total_ns += stats.wall_total_ns;
  stats.messages_handled = totals_.messages_handled - handled_before;
  if (essential_lost_) {
    essential_lost_ = false;
    throw Error(ErrorCode::kSocketClosed, essential_lost_what_);
  }
  return stats;
}

void EventLoop::flush(double timeout_s) {
  const std::int64_t deadline = wall_now_ns() + static_cast<std::int64_t>(timeout_s * 1e9);
  while (wall_now_ns() < deadline) {
    std::vector<pollfd> fds;
    std::vector<ConnId> ids;
    for (auto& [id, c] : conns_) {
      if (c.out.empty()) continue;
      fds.push_back({c.fd.get(), POLLOUT, 0});
      ids.push_back(id);
    }
    if (fds.empty()) return;
    ::poll(fds.data(), fds.size(), 10);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!fds[i].revents) continue;
      auto it = conns_.find(ids[i]);
      if (it != conns_.end() && !write_to(it->second)) conns_.erase(it);
    }
  }
}

}  // namespace tierprof
