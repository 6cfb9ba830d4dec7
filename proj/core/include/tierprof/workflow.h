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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tierprof {

enum class WorkflowState : std::uint8_t { kCommissioned, kActive, kDecommissioned };

std::string_view to_string(WorkflowState state);

struct WorkflowInstance {
  std::string id;
  int zone = 0;
  WorkflowState state = WorkflowState::kCommissioned;
  double current_load = 0;  // requests per second over the last window
  std::uint64_t requests = 0;
};

enum class WorkflowAction : std::uint8_t { kCommission, kDecommission };

std::string_view to_string(WorkflowAction action);

struct WorkflowThresholds {
  double high = 100;  // requests per second per active instance
  double low = 10;
};

// Load above `high` adds one instance; load below `low` removes one unless
// only one is left; anything in [low, high] is left alone.
std::vector<WorkflowAction> adjust_workflows(double load_per_instance,
                                             std::size_t active_instances,
                                             const WorkflowThresholds& thresholds);

// The instances one workflow manager runs. Instance ids are
// "<manager>/<n>" with n counting up from 0 and never reused.
class WorkflowPool {
 public:
  WorkflowPool(std::string manager, int zone);

  // Commissions and activates a new instance; returns its id.
  const std::string& commission();
  // Decommissions the newest active instance; nullopt when none is active.
  std::optional<std::string> decommission();

  std::vector<std::string> active_ids() const;
  std::size_t active_count() const;
  const std::vector<WorkflowInstance>& instances() const { return instances_; }
  WorkflowInstance* find(std::string_view id);

  // Accounts one request to `requested` if it is active, otherwise to the
  // next active instance. Returns the serving id, or nullopt with no active
  // instance.
  std::optional<std::string> route(std::string_view requested);
  std::uint64_t rerouted() const { return rerouted_; }

  // Closes a measurement window of `seconds`: updates current_load of each
  // active instance and returns the mean load per active instance.
  double close_window(double seconds);

 private:
  std::string manager_;
  int zone_;
  int next_ = 0;
  std::vector<WorkflowInstance> instances_;
  std::vector<std::uint64_t> window_;
  std::size_t cursor_ = 0;
  std::uint64_t rerouted_ = 0;
};

// Round-robin over a changing set of targets. Within each full round every
// target is chosen once, so per-target counts differ by at most one.
class RoundRobin {
 public:
  void set(std::vector<std::string> targets);
  void add(const std::string& target);
  void remove(std::string_view target);
  bool empty() const { return targets_.empty(); }
  std::size_t size() const { return targets_.size(); }
  const std::string& next();  // precondition: !empty()

 private:
  std::vector<std::string> targets_;
  std::size_t cursor_ = 0;
};

}  // namespace tierprof
