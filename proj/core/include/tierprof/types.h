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
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tierprof {

// Where attributed time goes. Instrumentation may pre-tag a site with one of
// these; analysis assigns every remaining nanosecond to exactly one category.
enum class TimeCategory : std::uint8_t {
  kUserCompute,
  kKernel,
  kIoWaitPoll,
  kSleep,
  kHeartbeat,
  kVmLifecycle,
  kOther,
};

inline constexpr std::size_t kTimeCategoryCount = 7;
inline constexpr std::array<TimeCategory, kTimeCategoryCount> kAllTimeCategories = {
    TimeCategory::kUserCompute, TimeCategory::kKernel,    TimeCategory::kIoWaitPoll,
    TimeCategory::kSleep,       TimeCategory::kHeartbeat, TimeCategory::kVmLifecycle,
    TimeCategory::kOther,
};

std::string_view to_string(TimeCategory category);
std::optional<TimeCategory> parse_time_category(std::string_view text);

enum class SiteKind : std::uint8_t { kFunction, kRegion, kBuiltin };

std::string_view to_string(SiteKind kind);
std::optional<SiteKind> parse_site_kind(std::string_view text);

// A code location that events are attributed to. (file, line, symbol) is the
// identity; kind only affects rendering and which profiling level records it.
struct CodeSite {
  std::string file;
  int line = 0;
  std::string symbol;
  SiteKind kind = SiteKind::kFunction;

  friend bool operator==(const CodeSite& a, const CodeSite& b) {
    return a.file == b.file && a.line == b.line && a.symbol == b.symbol;
  }
  friend std::strong_ordering operator<=>(const CodeSite& a, const CodeSite& b) {
    if (auto c = a.file <=> b.file; c != 0) return c;
    if (auto c = a.line <=> b.line; c != 0) return c;
    return a.symbol <=> b.symbol;
  }
};

// pstats-style label: "file:line(symbol)" for code, "{symbol}" for builtins.
std::string site_label(const CodeSite& site);

// Label used for rule matching and thread tables: "file:line symbol".
std::string site_short_label(const CodeSite& site);

inline constexpr double kNanosPerSecond = 1e9;

inline double to_seconds(std::int64_t ns) { return static_cast<double>(ns) / kNanosPerSecond; }
inline std::int64_t to_nanos(double seconds) {
  return static_cast<std::int64_t>(seconds * kNanosPerSecond + (seconds >= 0 ? 0.5 : -0.5));
}

}  // namespace tierprof
