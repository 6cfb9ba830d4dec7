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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "tierprof/dump.h"
#include "tierprof/instrumentation.h"

namespace tierprof {

struct SampleStream {
  std::vector<StackSample> samples;
  std::int64_t interval_ns = 0;
  std::int64_t duration_ns = 0;  // time actually covered
  std::size_t ticks = 0;
  // The target thread ended before the requested duration elapsed.
  bool partial = false;
};

// Statistical profiler over the recorder's shadow stacks. A background thread
// wakes every `interval` and copies the active site stack of each live
// thread (or only `target`). The sampled threads run unmodified apart from
// the bracket hooks they already carry.
class Sampler {
 public:
  Sampler(Recorder& recorder, std::chrono::nanoseconds interval,
          std::optional<std::uint32_t> target = std::nullopt);
  ~Sampler();
  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  // Sampling stops by itself after `limit` if given.
  void start(std::optional<std::chrono::nanoseconds> limit = std::nullopt);
  SampleStream stop();

 private:
  void loop(std::stop_token stop, std::optional<std::chrono::nanoseconds> limit);

  Recorder& recorder_;
  const std::chrono::nanoseconds interval_;
  const std::optional<std::uint32_t> target_;
  std::mutex mutex_;
  std::condition_variable_any wake_;
  SampleStream stream_;
  std::jthread thread_;
};

// Blocking convenience wrapper: samples for `duration` from the caller's
// thread. A zero duration yields an empty stream.
SampleStream sample_stacks(Recorder& recorder, std::chrono::nanoseconds interval,
                           std::chrono::nanoseconds duration,
                           std::optional<std::uint32_t> target = std::nullopt);

}  // namespace tierprof
