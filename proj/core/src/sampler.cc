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

#include "tierprof/sampler.h"

#include "tierprof/clock.h"

namespace tierprof {

Sampler::Sampler(Recorder& recorder, std::chrono::nanoseconds interval,
                 std::optional<std::uint32_t> target)
    : recorder_(recorder), interval_(interval), target_(target) {
  stream_.interval_ns = interval.count();
}

Sampler::~Sampler() {
  if (thread_.joinable()) {
    thread_.request_stop();
    wake_.notify_all();
  }
}

void Sampler::start(std::optional<std::chrono::nanoseconds> limit) {
  thread_ = std::jthread([this, limit](std::stop_token stop) { loop(stop, limit); });
}

SampleStream Sampler::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    wake_.notify_all();
    thread_.join();
  }
  std::lock_guard lock(mutex_);
  return stream_;
}

void Sampler::loop(std::stop_token stop, std::optional<std::chrono::nanoseconds> limit) {
  using clock = std::chrono::steady_clock;
  const auto begin = clock::now();
  const std::int64_t begin_ns = wall_now_ns();
  std::vector<StackSnapshot> snapshots;
  std::unique_lock lock(mutex_);
  for (std::size_t tick = 1;; ++tick) {
    const auto due = begin + interval_ * static_cast<std::int64_t>(tick);
    if (limit && due - begin > *limit) break;
    if (wake_.wait_until(lock, stop, due, [] { return false; }) || stop.stop_requested()) break;

    lock.unlock();
    recorder_.snapshot_stacks(snapshots);
    const std::int64_t now = wall_now_ns();
    lock.lock();

    bool target_seen = false;
    for (StackSnapshot& snap : snapshots) {
      if (target_ && snap.thread_id != *target_) continue;
      if (!snap.alive) continue;
      target_seen = true;
      stream_.samples.push_back({snap.thread_id, now, 0, std::move(snap.stack)});
    }
    ++stream_.ticks;
    if (target_ && !target_seen) {
      stream_.partial = true;
      break;
    }
  }
  stream_.duration_ns = wall_now_ns() - begin_ns;
}

SampleStream sample_stacks(Recorder& recorder, std::chrono::nanoseconds interval,
                           std::chrono::nanoseconds duration, std::optional<std::uint32_t> target) {
  if (duration.count() <= 0) {
    SampleStream empty;
    empty.interval_ns = interval.count();
    return empty;
  }
  Sampler sampler(recorder, interval, target);
  sampler.start(duration);
  std::this_thread::sleep_for(duration + interval);
  return sampler.stop();
}

}  // namespace tierprof
