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
#include <string>
#include <string_view>

namespace tierprof {

// IPv4 stream endpoint; the testbed only ever uses the loopback interface.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
  static Endpoint parse(std::string_view text);  // "host:port", throws Error(kConfig)
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// Owns a file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  ~UniqueFd() { reset(); }
  UniqueFd(UniqueFd&& other) noexcept : fd_(other.release()) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) reset(other.release());
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1);

 private:
  int fd_ = -1;
};

// Non-blocking listening socket on 127.0.0.1. Port 0 picks an ephemeral port;
// the bound port is written to `bound`. Throws Error(kPortUnavailable).
UniqueFd listen_tcp(std::uint16_t port, std::uint16_t* bound);

// True when `port` can currently be bound on the loopback interface.
bool port_available(std::uint16_t port);

// Connects with retries until `timeout_s` passes (the peer may still be
// starting). The returned socket is non-blocking with Nagle disabled.
// Throws Error(kSocketClosed) when the peer never accepts.
UniqueFd connect_tcp(const Endpoint& endpoint, double timeout_s);

void set_nonblocking(int fd);

}  // namespace tierprof
