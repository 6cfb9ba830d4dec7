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
#include <map>
#include <string>
#include <vector>

#include "tierprof/scenario.h"

namespace tierprof {

struct FailureRecord {
  std::string name;
  NodeRole role = NodeRole::kHostNode;
  std::int64_t last_heartbeat_ns = 0;
  std::int64_t detected_ns = 0;
};

struct LivenessReport {
  std::vector<FailureRecord> failures;  // in detection order
  // Hosts whose LocalController failed while they kept heartbeating.
  std::vector<std::string> unreachable_via_controller;
};

// Heartbeat failure detector. An entity is declared failed once no heartbeat
// arrived for more than miss_limit * interval; with heartbeats every interval
// that happens within (miss_limit + 1) * interval of the entity dying, plus
// one check period.
class LivenessMonitor {
 public:
  LivenessMonitor(std::int64_t interval_ns, int miss_limit);

  // Starts (or restarts) tracking `name` as alive at `now_ns`. `site` groups
  // a LocalController with the hosts behind it; empty for other roles.
  void watch(const std::string& name, NodeRole role, const std::string& site,
             std::int64_t now_ns);
  // Treat every watched entity as just heard from, e.g. when monitoring starts.
  void reset(std::int64_t now_ns);
  void heartbeat(const std::string& name, std::int64_t now_ns);

  // Declares overdue entities failed and returns the new failures.
  std::vector<FailureRecord> check(std::int64_t now_ns);

  bool failed(const std::string& name) const;
  std::int64_t threshold_ns() const { return threshold_ns_; }
  const LivenessReport& report() const { return report_; }

 private:
  struct Watched {
    NodeRole role;
    std::string site;
    std::int64_t last_ns;
    bool failed = false;
    bool unreachable = false;
  };

  std::int64_t threshold_ns_;
  std::map<std::string, Watched> watched_;
  LivenessReport report_;
};

}  // namespace tierprof
