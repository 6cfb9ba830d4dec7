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

#include "tierprof/liveness.h"

#include <algorithm>

namespace tierprof {

LivenessMonitor::LivenessMonitor(std::int64_t interval_ns, int miss_limit)
    : threshold_ns_(interval_ns * miss_limit) {}

void LivenessMonitor::watch(const std::string& name, NodeRole role, const std::string& site,
                            std::int64_t now_ns) {
  watched_[name] = Watched{role, site, now_ns};
}

void LivenessMonitor::reset(std::int64_t now_ns) {
  for (auto& [name, w] : watched_) {
    if (!w.failed) w.last_ns = now_ns;
  }
}

void LivenessMonitor::heartbeat(const std::string& name, std::int64_t now_ns) {
  auto it = watched_.find(name);
  if (it == watched_.end() || it->second.failed) return;
  it->second.last_ns = std::max(it->second.last_ns, now_ns);
}

std::vector<FailureRecord> LivenessMonitor::check(std::int64_t now_ns) {
  std::vector<FailureRecord> fresh;
  for (auto& [name, w] : watched_) {
    if (w.failed || now_ns - w.last_ns <= threshold_ns_) continue;
    w.failed = true;
    fresh.push_back({name, w.role, w.last_ns, now_ns});
    report_.failures.push_back(fresh.back());
    if (w.role != NodeRole::kLocalController) continue;
    for (auto& [host, h] : watched_) {
      if (h.role == NodeRole::kHostNode && h.site == w.site && !h.failed && !h.unreachable) {
        h.unreachable = true;
        report_.unreachable_via_controller.push_back(host);
      }
    }
  }
  return fresh;
}

bool LivenessMonitor::failed(const std::string& name) const {
  const auto it = watched_.find(name);
  return it != watched_.end() && it->second.failed;
}

}  // namespace tierprof
