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

namespace tierprof {

// Monotonic wall clock, nanoseconds.
std::int64_t wall_now_ns() noexcept;

// CPU time consumed by the calling thread, nanoseconds.
std::int64_t thread_cpu_now_ns() noexcept;

// CPU time consumed by the whole process, nanoseconds.
std::int64_t process_cpu_now_ns() noexcept;

// Reported resolution of the monotonic clock.
std::int64_t wall_clock_resolution_ns() noexcept;

// Burn CPU on the calling thread for at least `ns` of wall time.
void spin_for_ns(std::int64_t ns) noexcept;

}  // namespace tierprof

namespace tierprof {

inline double to_seconds_since(std::int64_t start_wall_ns) noexcept {
  return static_cast<double>(wall_now_ns() - start_wall_ns) / 1e9;
}

}  // namespace tierprof
