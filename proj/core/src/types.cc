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

#include "tierprof/types.h"

namespace tierprof {

std::string_view to_string(TimeCategory category) {
  switch (category) {
    case TimeCategory::kUserCompute: return "UserCompute";
    case TimeCategory::kKernel: return "Kernel";
    case TimeCategory::kIoWaitPoll: return "IoWaitPoll";
    case TimeCategory::kSleep: return "Sleep";
    case TimeCategory::kHeartbeat: return "Heartbeat";
    case TimeCategory::kVmLifecycle: return "VmLifecycle";
    case TimeCategory::kOther: return "Other";
  }
  return "Other";
}

std::optional<TimeCategory> parse_time_category(std::string_view text) {
  for (TimeCategory c : kAllTimeCategories) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(SiteKind kind) {
  switch (kind) {
    case SiteKind::kFunction: return "function";
    case SiteKind::kRegion: return "region";
    case SiteKind::kBuiltin: return "builtin";
  }
  return "function";
}

std::optional<SiteKind> parse_site_kind(std::string_view text) {
  if (text == "function") return SiteKind::kFunction;
  if (text == "region") return SiteKind::kRegion;
  if (text == "builtin") return SiteKind::kBuiltin;
  return std::nullopt;
}

std::string site_label(const CodeSite& site) {
  if (site.kind == SiteKind::kBuiltin) return "{" + site.symbol + "}";
  return site.file + ":" + std::to_string(site.line) + "(" + site.symbol + ")";
}

std::string site_short_label(const CodeSite& site) {
  return site.file + ":" + std::to_string(site.line) + " " + site.symbol;
}

}  // namespace tierprof
