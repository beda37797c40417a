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

// Seeded 2-D point-mass tasks on the arena [-1, 1]^2.
//
// Observation layout (6 values): agent xy, object xy (zeros when the task has
// no object), goal slot xy. The agent moves by 0.1 * clip(action, -1, 1)
// per step, clamped to the arena.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ptsl {

enum class EnvFamily { Reach, ConflictReach, PushBlock, GatedReach };

std::string to_string(EnvFamily family);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(Vec2, Vec2) = default;
};

double distance(Vec2 a, Vec2 b);

struct EnvSpec {
  std::string id;
  std::size_t state_dim = 6;
  std::size_t action_dim = 2;
  int horizon = 100;
  double success_radius = 0.05;
  EnvFamily family = EnvFamily::Reach;

  // ConflictReach: true goal = polarity * R(rotation) * cue, where the cue
  // is what the observation shows in the goal slot.
  double polarity = 1.0;
  double rotation = 0.0;
  // GatedReach: waypoint that has to be visited before the goal counts.
  Vec2 gate{};

  void validate() const;
};

struct EnvState {
  Vec2 agent;
  std::optional<Vec2> object;
  Vec2 goal;
  Vec2 cue;  // goal slot shown to the policy (== goal outside ConflictReach)
  bool gate_passed = false;
  int step = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

class Env {
 public:
  static constexpr double kStepScale = 0.1;
  static constexpr double kContactRadius = 0.1;
  static constexpr double kGateRadius = 0.1;
  static constexpr double kGoalHalfWidth = 0.8;
  static constexpr double kCueMinRadius = 0.3;
  static constexpr double kCueMaxRadius = 0.8;

  explicit Env(EnvSpec spec);

  std::vector<double> reset(std::uint64_t seed);
  /// Throws ContractError when called before reset or after done.
  StepResult step(std::span<const double> action);

  [[nodiscard]] const EnvSpec& spec() const { return spec_; }
  [[nodiscard]] const EnvState& state() const { return state_; }
  /// Overrides the current state (tests and oracles).
  void set_state(const EnvState& state);
  [[nodiscard]] std::vector<double> observation() const;
  /// Whether `goal` lies in the region reset() samples goals from.
  [[nodiscard]] bool goal_in_region(Vec2 goal) const;
  /// Whether the episode so far counts as a success.
  [[nodiscard]] bool success() const { return success_; }

 private:
  [[nodiscard]] double reward() const;
  [[nodiscard]] bool at_goal() const;

  EnvSpec spec_;
  EnvState state_;
  bool started_ = false;
  bool done_ = false;
  bool success_ = false;
};

/// Registered ids: reach, conflict-reach-pos, conflict-reach-neg,
/// conflict-reach-ortho-pos, conflict-reach-ortho-neg, push-block,
/// gated-reach-north, gated-reach-south.
EnvSpec make_env_spec(const std::string& id);
std::vector<std::string> registered_envs();

/// One environment per task. Suites: reach (single task), conflict-pair,
/// mt4-toy, mt8-toy.
class EnvSuite {
 public:
  explicit EnvSuite(const std::vector<std::string>& env_ids);
  static EnvSuite from_id(const std::string& suite_id);
  static std::vector<std::string> suite_members(const std::string& suite_id);

  [[nodiscard]] std::size_t num_tasks() const { return envs_.size(); }
  [[nodiscard]] std::size_t state_dim() const { return envs_.front().spec().state_dim; }
  [[nodiscard]] std::size_t action_dim() const { return envs_.front().spec().action_dim; }
  [[nodiscard]] int horizon() const { return envs_.front().spec().horizon; }
  Env& env(std::size_t task) { return envs_.at(task); }
  [[nodiscard]] const Env& env(std::size_t task) const { return envs_.at(task); }

 private:
  std::vector<Env> envs_;
};

}  // namespace ptsl
