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

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "tierprof/clock.h"
#include "tierprof/profile_model.h"
#include "tierprof/sampler.h"

namespace tierprof {
namespace {

using namespace std::chrono_literals;

// Fraction of samples whose innermost frame is `site`.
double leaf_fraction(const SampleStream& s, SiteId site) {
  if (s.samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const StackSample& sample : s.samples) {
    if (!sample.stack.empty() && sample.stack.back() == site) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s.samples.size());
}

TEST(Sampler, BusyFunctionDominatesItsThread) {
  Recorder r;
  r.set_levels(Levels::all());
  const SiteHandle f = r.intern({"s.cc", 1, "busy", SiteKind::kFunction});
  std::atomic<std::uint32_t> id{0};
  std::atomic<bool> stop{false};
  std::thread worker([&] {
    ScopedSite s(r, f);
    id = r.current_thread_id();
    while (!stop) spin_for_ns(200'000);
  });
  while (id == 0) std::this_thread::yield();
  const SampleStream stream = sample_stacks(r, 5ms, 400ms, id.load());
  stop = true;
  worker.join();
  ASSERT_GE(stream.samples.size(), 20u);
  EXPECT_GE(leaf_fraction(stream, f.id), 0.9);
  EXPECT_FALSE(stream.partial);
}

TEST(Sampler, AlternatingFunctionsSplitSamples) {
  Recorder r;
  r.set_levels(Levels::all());
  const SiteHandle f = r.intern({"s.cc", 1, "f", SiteKind::kFunction});
  const SiteHandle g = r.intern({"s.cc", 2, "g", SiteKind::kFunction});
  std::atomic<std::uint32_t> id{0};
  std::atomic<bool> stop{false};
  std::thread worker([&] {
    id = r.current_thread_id();
    while (!stop) {
      { ScopedSite s(r, f); spin_for_ns(3'000'000); }
      { ScopedSite s(r, g); spin_for_ns(3'000'000); }
    }
  });
  while (id == 0) std::this_thread::yield();
  const SampleStream stream = sample_stacks(r, 1ms, 1s, id.load());
  stop = true;
  worker.join();
  ASSERT_GE(stream.samples.size(), 100u);
  const double fa = leaf_fraction(stream, f.id);
  const double ga = leaf_fraction(stream, g.id);
  EXPECT_NEAR(fa, 0.5, 0.15);
  EXPECT_NEAR(ga, 0.5, 0.15);
  EXPECT_NEAR(fa + ga, 1.0, 0.05);
}

TEST(Sampler, ZeroDurationYieldsNoSamples) {
  Recorder r;
  const SampleStream s = sample_stacks(r, 1ms, 0ms);
  EXPECT_TRUE(s.samples.empty());
  EXPECT_EQ(s.ticks, 0u);
  EXPECT_EQ(s.interval_ns, 1'000'000);
}

TEST(Sampler, TargetExitMarksStreamPartial) {
  Recorder r;
  r.set_levels(Levels::all());
  const SiteHandle f = r.intern({"s.cc", 1, "short", SiteKind::kFunction});
  std::atomic<std::uint32_t> id{0};
  std::atomic<bool> go{false};
  std::thread worker([&] {
    ScopedSite s(r, f);
    id = r.current_thread_id();
    while (!go) std::this_thread::sleep_for(1ms);
    std::this_thread::sleep_for(50ms);
  });
  while (id == 0) std::this_thread::yield();
  Sampler sampler(r, 2ms, id.load());
  sampler.start(2s);
  go = true;
  worker.join();
  std::this_thread::sleep_for(30ms);
  const SampleStream s = sampler.stop();
  EXPECT_TRUE(s.partial);
  EXPECT_LT(s.duration_ns, 1'000'000'000);
  EXPECT_FALSE(s.samples.empty());
}

TEST(Sampler, SamplesAggregateIntoCollapsedStacks) {
  Recorder r;
  r.set_levels(Levels::all());
  const SiteHandle outer = r.intern({"s.cc", 1, "outer", SiteKind::kFunction});
  const SiteHandle inner = r.intern({"s.cc", 2, "inner", SiteKind::kFunction});
  std::atomic<std::uint32_t> id{0};
  std::atomic<bool> stop{false};
  std::thread worker([&] {
    ScopedSite a(r, outer);
    ScopedSite b(r, inner);
    id = r.current_thread_id();
    while (!stop) spin_for_ns(200'000);
  });
  while (id == 0) std::this_thread::yield();
  const SampleStream stream = sample_stacks(r, 5ms, 100ms, id.load());
  stop = true;
  worker.join();
  const auto stacks = aggregate_samples(stream.samples, r.sites());
  ASSERT_FALSE(stacks.empty());
  EXPECT_NE(stacks.front().stack.find("outer"), std::string::npos);
  EXPECT_NE(stacks.front().stack.find(";"), std::string::npos);
  std::uint64_t total = 0;
  for (const StackCount& s : stacks) total += s.count;
  EXPECT_EQ(total, stream.samples.size());
}

}  // namespace
}  // namespace tierprof
