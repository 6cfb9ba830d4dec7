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

#include "tierprof/net.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "text_util.h"
#include "tierprof/clock.h"
#include "tierprof/error.h"

namespace tierprof {

namespace {

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::kConfig, "not an IPv4 address: " + host);
  }
  return addr;
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::kConfig, "expected host:port, got '" + std::string(text) + "'");
  }
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  try {
    e.port = detail::parse_number<std::uint16_t>(text.substr(colon + 1), "port");
  } catch (const Error& err) {
    throw Error(ErrorCode::kConfig, err.what());
  }
  return e;
}

void UniqueFd::reset(int fd) {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw Error(ErrorCode::kIo, "fcntl: " + errno_text());
  }
}

UniqueFd listen_tcp(std::uint16_t port, std::uint16_t* bound) {
  UniqueFd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd) throw Error(ErrorCode::kIo, "socket: " + errno_text());
  const int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_address("127.0.0.1", port);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(ErrorCode::kPortUnavailable,
                "cannot bind 127.0.0.1:" + std::to_string(port) + ": " + errno_text());
  }
  if (::listen(fd.get(), 128) != 0) {
    throw Error(ErrorCode::kPortUnavailable, "listen: " + errno_text());
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  if (bound) *bound = ntohs(addr.sin_port);
  set_nonblocking(fd.get());
  return fd;
}

bool port_available(std::uint16_t port) {
  try {
    listen_tcp(port, nullptr);
    return true;
  } catch (const Error&) {
    return false;
  }
}

UniqueFd connect_tcp(const Endpoint& endpoint, double timeout_s) {
  const sockaddr_in addr = make_address(endpoint.host, endpoint.port);
  const std::int64_t deadline = wall_now_ns() + static_cast<std::int64_t>(timeout_s * 1e9);
  std::string last_error;
  while (true) {
    UniqueFd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd) throw Error(ErrorCode::kIo, "socket: " + errno_text());
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      const int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      set_nonblocking(fd.get());
      return fd;
    }
    last_error = errno_text();
    if (wall_now_ns() >= deadline) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  throw Error(ErrorCode::kSocketClosed,
              "cannot connect to " + endpoint.to_string() + ": " + last_error);
}

}  // namespace tierprof
