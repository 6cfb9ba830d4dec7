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

#include <cstdint>

namespace tierprof {

// Process-level clock split, in seconds. `other_s` is the part of elapsed
// time that was neither user nor kernel CPU: waiting on I/O, sleeping, or
// runnable-but-descheduled.
struct CoarseBreakdown {
  double elapsed_s = 0;
  double user_s = 0;
  double system_s = 0;
  double other_s = 0;
  // user + system exceeded elapsed (several threads burning CPU at once).
  bool oversubscribed = false;
};

// Throws Error(kConfig) on negative inputs.
CoarseBreakdown make_breakdown(double elapsed_s, double user_s, double system_s);

CoarseBreakdown breakdown_from_rusage(const rusage& usage, double elapsed_s);

// The calling process, elapsed measured from `start_wall_ns` (monotonic clock).
CoarseBreakdown read_self_times(std::int64_t start_wall_ns);

// Any live or zombie process via /proc. Throws Error(kProcessNotFound).
CoarseBreakdown read_process_times(pid_t pid);

}  // namespace tierprof
