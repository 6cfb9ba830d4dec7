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

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <source_location>
#include <string>
#include <string_view>
#include <vector>

#include "tierprof/dump.h"
#include "tierprof/types.h"

namespace tierprof {

enum class Level : std::uint8_t {
  kCoarse = 1 << 0,
  kFunction = 1 << 1,
  kLine = 1 << 2,
  kThread = 1 << 3,
  kSample = 1 << 4,
};

class Levels {
 public:
  constexpr Levels() = default;
  constexpr explicit Levels(std::uint8_t mask) : mask_(mask) {}

  static Levels all() { return Levels(0x1f); }
  // Comma-separated subset of {coarse,function,line,thread,sample}; "all"
  // and "none" are accepted. Throws Error(kConfig) on unknown names.
  static Levels parse(std::string_view text);

  constexpr bool has(Level level) const { return (mask_ & static_cast<std::uint8_t>(level)) != 0; }
  constexpr Levels with(Level level) const {
    return Levels(static_cast<std::uint8_t>(mask_ | static_cast<std::uint8_t>(level)));
  }
  constexpr std::uint8_t mask() const { return mask_; }
  std::string to_string() const;

  // Whether sites of this kind produce events under these levels.
  constexpr bool records(SiteKind kind) const {
    switch (kind) {
      case SiteKind::kFunction: return has(Level::kFunction) || has(Level::kThread);
      case SiteKind::kRegion: return has(Level::kLine);
      case SiteKind::kBuiltin:
        return has(Level::kFunction) || has(Level::kThread) || has(Level::kLine);
    }
    return false;
  }

  friend constexpr bool operator==(Levels, Levels) = default;

 private:
  std::uint8_t mask_ = 0;
};

struct SiteHandle {
  SiteId id = 0;
  SiteKind kind = SiteKind::kFunction;
  std::optional<TimeCategory> tag;
};

struct StackSnapshot {
  std::uint32_t thread_id = 0;
  bool alive = true;
  std::vector<SiteId> stack;
};

namespace detail {
struct ThreadBuffer;
}

// Collects bracket events into per-thread append-only buffers. Recording
// threads never take a lock after their first event; the registry mutex is
// only touched on thread registration, site interning, sampling and flush.
//
// collect() and clear() read other threads' buffers and must only be called
// while those threads are not recording.
class Recorder {
 public:
  Recorder();
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  static Recorder& global();

  // Returns the id for `site`, creating it on first use. Idempotent.
  SiteHandle intern(const CodeSite& site, std::optional<TimeCategory> tag = std::nullopt);

  void set_levels(Levels levels) noexcept { levels_.store(levels.mask(), std::memory_order_relaxed); }
  Levels levels() const noexcept { return Levels(levels_.load(std::memory_order_relaxed)); }

  // Returns false (and records nothing) when the site's kind is disabled.
  bool enter(const SiteHandle& site) noexcept;
  // A mismatched exit is recorded as a NestingViolation and dropped, so the
  // event stream stays well nested.
  void exit(const SiteHandle& site) noexcept;

  void set_thread_name(std::string name);
  std::uint32_t current_thread_id();
  std::size_t current_depth();

  void snapshot_stacks(std::vector<StackSnapshot>& out) const;
  bool thread_alive(std::uint32_t thread_id) const;

  Dump collect(DumpHeader header) const;
  std::vector<SiteRecord> sites() const;
  std::size_t violation_count() const;
  void clear();

 private:
  detail::ThreadBuffer& local_buffer();

  const std::uint64_t generation_;
  std::atomic<std::uint8_t> levels_{0};
  mutable std::mutex mutex_;
  std::vector<SiteRecord> sites_;
  std::map<CodeSite, SiteId> index_;
  std::vector<std::shared_ptr<detail::ThreadBuffer>> threads_;
};

class ScopedSite {
 public:
  ScopedSite(Recorder& recorder, const SiteHandle& site) noexcept
      : recorder_(recorder), site_(site), active_(recorder.enter(site)) {}
  ~ScopedSite() {
    if (active_) recorder_.exit(site_);
  }
  ScopedSite(const ScopedSite&) = delete;
  ScopedSite& operator=(const ScopedSite&) = delete;

 private:
  Recorder& recorder_;
  const SiteHandle& site_;
  bool active_;
};

// Strip directories from a source path: the file component of site labels.
std::string_view source_basename(std::string_view path);

// Shared identity for builtin sites ("{poll}", "{sleep}"): they merge into a
// single row regardless of call site, as interpreter builtins do.
inline constexpr std::string_view kBuiltinFile = "~";

// Wraps a blocking builtin call: a Region at the call site (line level) around
// a tagged Builtin site (function level).
class ScopedBuiltin {
 public:
  ScopedBuiltin(Recorder& recorder, const SiteHandle& region, const SiteHandle& builtin) noexcept
      : outer_(recorder, region), inner_(recorder, builtin) {}

 private:
  ScopedSite outer_;
  ScopedSite inner_;
};

// Sleeps for `duration` inside a Sleep-tagged builtin/region pair so analysis
// can attribute the time without guessing.
void instrument_sleep(std::chrono::nanoseconds duration, Recorder& recorder = Recorder::global(),
                      std::source_location where = std::source_location::current());

// Measures the cost of one recorded event (half an enter/exit pair) with both
// clocks, and the effective wall-clock resolution.
Calibration calibrate(std::size_t pairs = 200'000);

}  // namespace tierprof

#define TIERPROF_CAT_INNER(a, b) a##b
#define TIERPROF_CAT(a, b) TIERPROF_CAT_INNER(a, b)

#define TIERPROF_SITE_(kind, symbol, tag)                                                      \
  static const ::tierprof::SiteHandle TIERPROF_CAT(tierprof_site_, __LINE__) =                 \
      ::tierprof::Recorder::global().intern(                                                   \
          {std::string(::tierprof::source_basename(__FILE__)), __LINE__, symbol, kind}, tag); \
  const ::tierprof::ScopedSite TIERPROF_CAT(tierprof_scope_, __LINE__)(                        \
      ::tierprof::Recorder::global(), TIERPROF_CAT(tierprof_site_, __LINE__))

// Function-level site named after the enclosing function.
#define TIERPROF_FUNCTION() TIERPROF_SITE_(::tierprof::SiteKind::kFunction, __func__, std::nullopt)
#define TIERPROF_FUNCTION_TAGGED(tag) TIERPROF_SITE_(::tierprof::SiteKind::kFunction, __func__, tag)
// Statement/region-level site; `name` stands in for the line contents.
#define TIERPROF_REGION(name) TIERPROF_SITE_(::tierprof::SiteKind::kRegion, name, std::nullopt)
#define TIERPROF_REGION_TAGGED(name, tag) TIERPROF_SITE_(::tierprof::SiteKind::kRegion, name, tag)
