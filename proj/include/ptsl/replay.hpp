// Copyright 2026 The PTSL Authors. All Rights Reserved.
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

// Transitions and the uniform replay buffer.

#pragma once

#include <cstddef>
#include <vector>

#include "ptsl/autodiff.hpp"
#include "ptsl/nn.hpp"

namespace ptsl {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // each component in [-1, 1]
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
  int task_id = 0;
};

struct Batch {
  ad::Tensor states;       // B x S
  ad::Tensor actions;      // B x A
  ad::Tensor rewards;      // B x 1
  ad::Tensor next_states;  // B x S
  ad::Tensor dones;        // B x 1, 0 or 1
  std::vector<int> task_ids;

  [[nodiscard]] std::size_t size() const { return task_ids.size(); }
};

/// Stacks transitions into batch tensors.
Batch make_batch(const std::vector<Transition>& transitions);

/// Ring buffer over all tasks with per-task index lists.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t num_tasks);

  /// Throws TaskError for a bad task id, ContractError for an action outside
  /// [-1, 1] or inconsistent widths.
  void add(Transition transition);

  /// Uniform sampling with replacement over everything stored.
  [[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  [[nodiscard]] Batch sample(std::size_t batch_size, Rng& rng) const;

  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t num_tasks() const { return per_task_.size(); }
  [[nodiscard]] const Transition& at(std::size_t index) const { return items_.at(index); }
  /// Storage slots currently holding transitions of `task`.
  [[nodiscard]] const std::vector<std::size_t>& task_indices(int task) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
  std::vector<std::vector<std::size_t>> per_task_;
  std::vector<std::size_t> slot_in_task_;  // position of slot i inside its task list
};

}  // namespace ptsl
