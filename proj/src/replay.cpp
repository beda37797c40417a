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

#include "ptsl/replay.hpp"

#include <algorithm>

#include "ptsl/errors.hpp"

namespace ptsl {

namespace {

template <typename Get>
Batch stack(std::size_t n, Get get) {
  if (n == 0) throw ContractError("cannot build an empty batch");
  const std::size_t s = get(0).state.size();
  const std::size_t a = get(0).action.size();
  std::vector<double> states(n * s), next_states(n * s), actions(n * a), rewards(n), dones(n);
  Batch b;
  b.task_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = get(i);
    if (t.state.size() != s || t.next_state.size() != s || t.action.size() != a)
      throw DimensionError("transitions with inconsistent widths");
    std::copy(t.state.begin(), t.state.end(), states.begin() + static_cast<std::ptrdiff_t>(i * s));
    std::copy(t.next_state.begin(), t.next_state.end(), next_states.begin() + static_cast<std::ptrdiff_t>(i * s));
    std::copy(t.action.begin(), t.action.end(), actions.begin() + static_cast<std::ptrdiff_t>(i * a));
    rewards[i] = t.reward;
    dones[i] = t.done ? 1.0 : 0.0;
    b.task_ids[i] = t.task_id;
  }
  b.states = ad::Tensor::from_values({n, s}, std::move(states));
  b.next_states = ad::Tensor::from_values({n, s}, std::move(next_states));
  b.actions = ad::Tensor::from_values({n, a}, std::move(actions));
  b.rewards = ad::Tensor::from_values({n, 1}, std::move(rewards));
  b.dones = ad::Tensor::from_values({n, 1}, std::move(dones));
  return b;
}

}  // namespace

Batch make_batch(const std::vector<Transition>& transitions) {
  return stack(transitions.size(), [&](std::size_t i) -> const Transition& { return transitions[i]; });
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t num_tasks) : capacity_(capacity), per_task_(num_tasks) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  if (num_tasks == 0) throw ConfigError("replay buffer needs at least one task");
  items_.reserve(std::min<std::size_t>(capacity, 1u << 20));
}

void ReplayBuffer::add(Transition t) {
  if (t.task_id < 0 || static_cast<std::size_t>(t.task_id) >= per_task_.size())
    throw TaskError("transition task id " + std::to_string(t.task_id) + " out of range");
  for (double v : t.action)
    if (!(v >= -1.0 && v <= 1.0)) throw ContractError("transition action outside [-1, 1]");
  if (!items_.empty()) {
    const auto& ref = items_.front();
    if (t.state.size() != ref.state.size() || t.next_state.size() != ref.state.size() ||
        t.action.size() != ref.action.size())
      throw DimensionError("transition widths differ from stored transitions");
  }

  const auto task = static_cast<std::size_t>(t.task_id);
  if (items_.size() < capacity_) {
    const std::size_t slot = items_.size();
    items_.push_back(std::move(t));
    slot_in_task_.push_back(per_task_[task].size());
    per_task_[task].push_back(slot);
    return;
  }
  // Overwrite the oldest slot; swap-remove it from its previous task list.
  const std::size_t slot = next_;
  next_ = (next_ + 1) % capacity_;
  auto& old_list = per_task_[static_cast<std::size_t>(items_[slot].task_id)];
  const std::size_t pos = slot_in_task_[slot];
  old_list[pos] = old_list.back();
  slot_in_task_[old_list[pos]] = pos;
  old_list.pop_back();
  items_[slot] = std::move(t);
  slot_in_task_[slot] = per_task_[task].size();
  per_task_[task].push_back(slot);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (items_.empty()) throw ContractError("sampling from an empty replay buffer");
  if (batch_size == 0) throw ContractError("batch size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const auto idx = sample_indices(batch_size, rng);
  return stack(idx.size(), [&](std::size_t i) -> const Transition& { return items_[idx[i]]; });
}

const std::vector<std::size_t>& ReplayBuffer::task_indices(int task) const {
  if (task < 0 || static_cast<std::size_t>(task) >= per_task_.size()) throw TaskError("task id out of range");
  return per_task_[static_cast<std::size_t>(task)];
}

}  // namespace ptsl
