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

// Round-robin multi-task training loop and its metrics log.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptsl/envs.hpp"
#include "ptsl/sac.hpp"

namespace ptsl {

struct MetricsRow {
  std::size_t step = 0;  // environment steps per task so far
  int task_id = -1;      // -1 for the mean over tasks
  double success_rate = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double alpha = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  static constexpr const char* kHeader = "step,task_id,success_rate,actor_loss,critic_loss,alpha";

  [[nodiscard]] bool empty() const { return rows.empty(); }
  [[nodiscard]] std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static MetricsLog parse_csv(const std::string& text);
  static MetricsLog read_csv(const std::filesystem::path& path);
};

struct TrainConfig {
  std::size_t steps_per_task = 0;
  std::size_t eval_interval = 2000;   // steps per task between evaluations
  std::size_t eval_episodes = 10;     // per task
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 0;  // steps per task; 0 disables
  std::filesystem::path checkpoint_dir;
};

/// Deterministic-policy success rate of `task` over `episodes` seeded resets.
double evaluate_task(SacAgent& agent, EnvSuite& suite, int task, std::size_t episodes, std::uint64_t seed);

/// Cycles through the tasks one episode at a time. Warmup steps use uniform
/// random actions; afterwards every environment step is followed by one
/// gradient update. Throws NumericalError when a loss stops being finite.
MetricsLog train(SacAgent& agent, EnvSuite& suite, const TrainConfig& config);

}  // namespace ptsl
