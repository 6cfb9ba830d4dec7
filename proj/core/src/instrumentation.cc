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

#include "tierprof/instrumentation.h"

#include <sys/syscall.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <thread>

#include "tierprof/clock.h"
#include "tierprof/error.h"

namespace tierprof {

namespace detail {

struct ThreadBuffer {
  static constexpr std::size_t kShadowDepth = 256;

  std::uint32_t thread_id = 0;
  std::int64_t os_tid = 0;
  std::string name;
  std::vector<ProfileEvent> events;
  std::vector<NestingViolation> violations;
  std::vector<SiteId> nest;

  // Mirror of `nest` readable by the sampler thread.
  std::array<std::atomic<SiteId>, kShadowDepth> shadow{};
  std::atomic<std::uint32_t> shadow_depth{0};
  std::atomic<bool> alive{true};

  void publish_depth() noexcept {
    shadow_depth.store(static_cast<std::uint32_t>(nest.size()), std::memory_order_release);
  }
};

}  // namespace detail

namespace {

std::atomic<std::uint64_t> g_next_generation{1};

// The buffer for the recorder this thread used last, plus a few parked ones
// so alternating between recorders keeps one buffer (and name) per recorder.
struct LocalCache {
  static constexpr std::size_t kParked = 8;

  std::uint64_t generation = 0;
  std::shared_ptr<detail::ThreadBuffer> buffer;
  std::vector<std::pair<std::uint64_t, std::shared_ptr<detail::ThreadBuffer>>> parked;

  bool restore(std::uint64_t wanted) {
    for (auto it = parked.begin(); it != parked.end(); ++it) {
      if (it->first != wanted) continue;
      auto found = std::move(it->second);
      parked.erase(it);
      park();
      generation = wanted;
      buffer = std::move(found);
      return true;
    }
    return false;
  }
  void park() {
    if (!buffer) return;
    if (parked.size() == kParked) parked.erase(parked.begin());
    parked.emplace_back(generation, std::move(buffer));
  }

  ~LocalCache() {
    if (buffer) buffer->alive.store(false, std::memory_order_release);
    for (auto& [gen, b] : parked) b->alive.store(false, std::memory_order_release);
  }
};

thread_local LocalCache t_cache;

}  // namespace

Levels Levels::parse(std::string_view text) {
  std::uint8_t mask = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view name = text.substr(start, end - start);
    if (name == "coarse") mask |= static_cast<std::uint8_t>(Level::kCoarse);
    else if (name == "function") mask |= static_cast<std::uint8_t>(Level::kFunction);
    else if (name == "line") mask |= static_cast<std::uint8_t>(Level::kLine);
    else if (name == "thread") mask |= static_cast<std::uint8_t>(Level::kThread);
    else if (name == "sample") mask |= static_cast<std::uint8_t>(Level::kSample);
    else if (name == "all") mask |= 0x1f;
    else if (name == "none" || name.empty()) {
    } else {
      throw Error(ErrorCode::kConfig, "unknown profiling level '" + std::string(name) + "'");
    }
    start = end + 1;
  }
  return Levels(mask);
}

std::string Levels::to_string() const {
  static constexpr std::pair<Level, std::string_view> kNames[] = {
      {Level::kCoarse, "coarse"}, {Level::kFunction, "function"}, {Level::kLine, "line"},
      {Level::kThread, "thread"}, {Level::kSample, "sample"},
  };
  std::string out;
  for (auto [level, name] : kNames) {
    if (!has(level)) continue;
    if (!out.empty()) out += ',';
    out += name;
  }
  return out.empty() ? "none" : out;
}

Recorder::Recorder() : generation_(g_next_generation.fetch_add(1)) {}

Recorder::~Recorder() = default;

Recorder& Recorder::global() {
  static Recorder* recorder = new Recorder();  // outlives thread_local caches
  return *recorder;
}

SiteHandle Recorder::intern(const CodeSite& site, std::optional<TimeCategory> tag) {
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(site); it != index_.end()) {
    const SiteRecord& known = sites_[it->second];
    return {it->second, known.site.kind, known.tag};
  }
  const auto id = static_cast<SiteId>(sites_.size());
  sites_.push_back({site, tag});
  index_.emplace(site, id);
  return {id, site.kind, tag};
}

detail::ThreadBuffer& Recorder::local_buffer() {
  if (t_cache.generation == generation_) return *t_cache.buffer;
  if (t_cache.restore(generation_)) return *t_cache.buffer;
  auto buffer = std::make_shared<detail::ThreadBuffer>();
  buffer->os_tid = static_cast<std::int64_t>(::syscall(SYS_gettid));
  buffer->events.reserve(1024);
  {
    std::lock_guard lock(mutex_);
    buffer->thread_id = static_cast<std::uint32_t>(threads_.size() + 1);
    threads_.push_back(buffer);
  }
  t_cache.park();
  t_cache.generation = generation_;
  t_cache.buffer = std::move(buffer);
  return *t_cache.buffer;
}

bool Recorder::enter(const SiteHandle& site) noexcept {
  if (!levels().records(site.kind)) return false;
  detail::ThreadBuffer& b = local_buffer();
  const std::int64_t wall = wall_now_ns();
  const std::int64_t cpu = thread_cpu_now_ns();
  b.events.push_back({b.thread_id, site.id, EventKind::kEnter, site.tag, wall, cpu});
  b.nest.push_back(site.id);
  if (b.nest.size() <= detail::ThreadBuffer::kShadowDepth) {
    b.shadow[b.nest.size() - 1].store(site.id, std::memory_order_relaxed);
  }
  b.publish_depth();
  return true;
}

void Recorder::exit(const SiteHandle& site) noexcept {
  detail::ThreadBuffer& b = local_buffer();
  const std::int64_t cpu = thread_cpu_now_ns();
  const std::int64_t wall = wall_now_ns();
  if (b.nest.empty() || b.nest.back() != site.id) {
    b.violations.push_back({b.thread_id, site.id, wall});
    return;
  }
  b.events.push_back({b.thread_id, site.id, EventKind::kExit, site.tag, wall, cpu});
  b.nest.pop_back();
  b.publish_depth();
}

void Recorder::set_thread_name(std::string name) { local_buffer().name = std::move(name); }

std::uint32_t Recorder::current_thread_id() { return local_buffer().thread_id; }

std::size_t Recorder::current_depth() { return local_buffer().nest.size(); }

void Recorder::snapshot_stacks(std::vector<StackSnapshot>& out) const {
  out.clear();
  std::lock_guard lock(mutex_);
  for (const auto& b : threads_) {
    StackSnapshot snap;
    snap.thread_id = b->thread_id;
    snap.alive = b->alive.load(std::memory_order_acquire);
    const std::uint32_t depth = std::min<std::uint32_t>(
        b->shadow_depth.load(std::memory_order_acquire), detail::ThreadBuffer::kShadowDepth);
    snap.stack.reserve(depth);
    for (std::uint32_t i = 0; i < depth; ++i) {
      snap.stack.push_back(b->shadow[i].load(std::memory_order_relaxed));
    }
    out.push_back(std::move(snap));
  }
}

bool Recorder::thread_alive(std::uint32_t thread_id) const {
  std::lock_guard lock(mutex_);
  for (const auto& b : threads_) {
    if (b->thread_id == thread_id) return b->alive.load(std::memory_order_acquire);
  }
  return false;
}

Dump Recorder::collect(DumpHeader header) const {
  std::lock_guard lock(mutex_);
  Dump dump;
  dump.header = std::move(header);
  dump.sites = sites_;
  std::size_t total = 0;
  for (const auto& b : threads_) total += b->events.size();
  dump.events.reserve(total);
  for (const auto& b : threads_) {
    dump.threads.push_back({b->thread_id, b->os_tid, b->name});
    dump.events.insert(dump.events.end(), b->events.begin(), b->events.end());
    dump.violations.insert(dump.violations.end(), b->violations.begin(), b->violations.end());
  }
  return dump;
}

std::vector<SiteRecord> Recorder::sites() const {
  std::lock_guard lock(mutex_);
  return sites_;
}

std::size_t Recorder::violation_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& b : threads_) n += b->violations.size();
  return n;
}

void Recorder::clear() {
  std::lock_guard lock(mutex_);
  for (const auto& b : threads_) {
    b->events.clear();
    b->violations.clear();
  }
}

std::string_view source_basename(std::string_view path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

void instrument_sleep(std::chrono::nanoseconds duration, Recorder& recorder,
                      std::source_location where) {
  const auto seconds = std::chrono::duration<double>(duration).count();
  char text[64];
  std::snprintf(text, sizeof text, "sleep(%g)", seconds);
  const SiteHandle region = recorder.intern(
      {std::string(source_basename(where.file_name())), static_cast<int>(where.line()), text,
       SiteKind::kRegion},
      TimeCategory::kSleep);
  const SiteHandle builtin =
      recorder.intern({std::string(kBuiltinFile), 0, "sleep", SiteKind::kBuiltin}, TimeCategory::kSleep);
  ScopedBuiltin scope(recorder, region, builtin);
  if (duration.count() > 0) std::this_thread::sleep_for(duration);
}

Calibration calibrate(std::size_t pairs) {
  Recorder recorder;
  recorder.set_levels(Levels().with(Level::kFunction));
  const SiteHandle site = recorder.intern({"calibrate", 1, "probe", SiteKind::kFunction});
  for (std::size_t i = 0; i < std::min<std::size_t>(pairs, 1000); ++i) {
    recorder.enter(site);
    recorder.exit(site);
  }
  recorder.clear();

  const std::int64_t start = wall_now_ns();
  for (std::size_t i = 0; i < pairs; ++i) {
    recorder.enter(site);
    recorder.exit(site);
  }
  const std::int64_t elapsed = wall_now_ns() - start;

  Calibration c;
  c.event_overhead_ns = pairs == 0 ? 0 : elapsed / static_cast<std::int64_t>(2 * pairs);

  // Smallest observable non-zero step between consecutive clock reads.
  std::int64_t step = wall_clock_resolution_ns();
  std::int64_t observed = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t a = wall_now_ns();
    std::int64_t b = wall_now_ns();
    while (b == a) b = wall_now_ns();
    observed = observed == 0 ? b - a : std::min(observed, b - a);
  }
  c.clock_resolution_ns = std::max<std::int64_t>({1, step, observed});
  return c;
}

}  // namespace tierprof
