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

#include "tierprof/workflow.h"

#include <algorithm>

namespace tierprof {

std::string_view to_string(WorkflowState state) {
  switch (state) {
    case WorkflowState::kCommissioned: return "Commissioned";
    case WorkflowState::kActive: return "Active";
    case WorkflowState::kDecommissioned: return "Decommissioned";
  }
  return "?";
}

std::string_view to_string(WorkflowAction action) {
  return action == WorkflowAction::kCommission ? "Commission" : "Decommission";
}

std::vector<WorkflowAction> adjust_workflows(double load_per_instance,
                                             std::size_t active_instances,
                                             const WorkflowThresholds& thresholds) {
  if (load_per_instance > thresholds.high) return {WorkflowAction::kCommission};
  if (load_per_instance < thresholds.low && active_instances > 1) {
    return {WorkflowAction::kDecommission};
  }
  return {};
}

WorkflowPool::WorkflowPool(std::string manager, int zone)
    : manager_(std::move(manager)), zone_(zone) {}

const std::string& WorkflowPool::commission() {
  WorkflowInstance instance;
  instance.id = manager_ + "/" + std::to_string(next_++);
  instance.zone = zone_;
  instance.state = WorkflowState::kCommissioned;
  instances_.push_back(std::move(instance));
  window_.push_back(0);
  // Instances are usable as soon as they exist in this testbed.
  instances_.back().state = WorkflowState::kActive;
  return instances_.back().id;
}

std::optional<std::string> WorkflowPool::decommission() {
  for (auto it = instances_.rbegin(); it != instances_.rend(); ++it) {
    if (it->state == WorkflowState::kActive) {
      it->state = WorkflowState::kDecommissioned;
      it->current_load = 0;
      return it->id;
    }
  }
  return std::nullopt;
}

std::vector<std::string> WorkflowPool::active_ids() const {
  std::vector<std::string> ids;
  for (const WorkflowInstance& w : instances_) {
    if (w.state == WorkflowState::kActive) ids.push_back(w.id);
  }
  return ids;
}

std::size_t WorkflowPool::active_count() const {
  return static_cast<std::size_t>(std::count_if(
      instances_.begin(), instances_.end(),
      [](const WorkflowInstance& w) { return w.state == WorkflowState::kActive; }));
}

WorkflowInstance* WorkflowPool::find(std::string_view id) {
  for (WorkflowInstance& w : instances_) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

std::optional<std::string> WorkflowPool::route(std::string_view requested) {
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (instances_[i].id == requested && instances_[i].state == WorkflowState::kActive) {
      ++instances_[i].requests;
      ++window_[i];
      return instances_[i].id;
    }
  }
  // Unknown or decommissioned target: hand it to the next active instance.
  for (std::size_t step = 0; step < instances_.size(); ++step) {
    const std::size_t i = (cursor_ + step) % instances_.size();
    if (instances_[i].state != WorkflowState::kActive) continue;
    cursor_ = i + 1;
    ++instances_[i].requests;
    ++window_[i];
    ++rerouted_;
    return instances_[i].id;
  }
  return std::nullopt;
}

double WorkflowPool::close_window(double seconds) {
  double total = 0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (instances_[i].state == WorkflowState::kActive) {
      instances_[i].current_load = seconds > 0 ? static_cast<double>(window_[i]) / seconds : 0.0;
      total += instances_[i].current_load;
      ++active;
    }
    window_[i] = 0;
  }
  return active ? total / static_cast<double>(active) : 0.0;
}

void RoundRobin::set(std::vector<std::string> targets) {
  targets_ = std::move(targets);
  cursor_ = 0;
}

void RoundRobin::add(const std::string& target) {
  if (std::find(targets_.begin(), targets_.end(), target) == targets_.end()) {
    targets_.push_back(target);
  }
}

void RoundRobin::remove(std::string_view target) {
  const auto it = std::find(targets_.begin(), targets_.end(), target);
  if (it == targets_.end()) return;
  const auto index = static_cast<std::size_t>(it - targets_.begin());
  targets_.erase(it);
  if (index < cursor_) --cursor_;
  if (cursor_ >= targets_.size()) cursor_ = 0;
}

const std::string& RoundRobin::next() {
  if (cursor_ >= targets_.size()) cursor_ = 0;
  return targets_[cursor_++];
}

}  // namespace tierprof
