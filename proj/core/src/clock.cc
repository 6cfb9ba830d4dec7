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

#include "tierprof/clock.h"

#include <time.h>

namespace tierprof {
namespace {

std::int64_t read_clock(clockid_t id) noexcept {
  timespec ts{};
  ::clock_gettime(id, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

}  // namespace

std::int64_t wall_now_ns() noexcept { return read_clock(CLOCK_MONOTONIC); }

std::int64_t thread_cpu_now_ns() noexcept { return read_clock(CLOCK_THREAD_CPUTIME_ID); }

std::int64_t process_cpu_now_ns() noexcept { return read_clock(CLOCK_PROCESS_CPUTIME_ID); }

std::int64_t wall_clock_resolution_ns() noexcept {
  timespec ts{};
  ::clock_getres(CLOCK_MONOTONIC, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

void spin_for_ns(std::int64_t ns) noexcept {
  const std::int64_t end = wall_now_ns() + ns;
  volatile std::uint64_t sink = 0;
  while (wall_now_ns() < end) {
    for (int i = 0; i < 64; ++i) sink = sink + static_cast<std::uint64_t>(i);
  }
}

}  // namespace tierprof
