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

#include "ptsl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ptsl/errors.hpp"

namespace ptsl {

std::string to_string(EnvFamily family) {
  switch (family) {
    case EnvFamily::Reach: return "reach";
    case EnvFamily::ConflictReach: return "conflict-reach";
    case EnvFamily::PushBlock: return "push-block";
    case EnvFamily::GatedReach: return "gated-reach";
  }
  return "reach";
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

namespace {

Vec2 clamp_arena(Vec2 p) { return {std::clamp(p.x, -1.0, 1.0), std::clamp(p.y, -1.0, 1.0)}; }

Vec2 uniform_box(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> d(-half, half);
  const double x = d(rng);
  return {x, d(rng)};
}

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

void EnvSpec::validate() const {
  if (horizon <= 0) throw ConfigError("env " + id + ": horizon must be positive");
  if (!(success_radius > 0.0)) throw ConfigError("env " + id + ": success_radius must be positive");
  if (state_dim != 6 || action_dim != 2) throw ConfigError("env " + id + ": point-mass tasks are 6-D state, 2-D action");
}

Env::Env(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::vector<double> Env::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  state_ = EnvState{};
  state_.agent = uniform_box(rng, 0.5);
  switch (spec_.family) {
    case EnvFamily::Reach:
      state_.goal = uniform_box(rng, kGoalHalfWidth);
      state_.cue = state_.goal;
      break;
    case EnvFamily::ConflictReach: {
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> radius(kCueMinRadius, kCueMaxRadius);
      const double a = angle(rng);
      const double r = radius(rng);
      state_.cue = {r * std::cos(a), r * std::sin(a)};
      const Vec2 g = rotate(state_.cue, spec_.rotation);
      state_.goal = {spec_.polarity * g.x, spec_.polarity * g.y};
      break;
    }
    case EnvFamily::PushBlock: {
      Vec2 obj = uniform_box(rng, 0.4);
      while (distance(obj, state_.agent) < 0.15) obj = uniform_box(rng, 0.4);
      state_.object = obj;
      state_.goal = uniform_box(rng, 0.6);
      state_.cue = state_.goal;
      break;
    }
    case EnvFamily::GatedReach:
      state_.object = spec_.gate;
      state_.goal = uniform_box(rng, kGoalHalfWidth);
      state_.cue = state_.goal;
      break;
  }
  started_ = true;
  done_ = false;
  success_ = false;
  return observation();
}

void Env::set_state(const EnvState& state) {
  state_ = state;
  started_ = true;
  done_ = state.step >= spec_.horizon;
  success_ = false;
}

std::vector<double> Env::observation() const {
  Vec2 obj{};
  if (state_.object && !(spec_.family == EnvFamily::GatedReach && state_.gate_passed)) obj = *state_.object;
  return {state_.agent.x, state_.agent.y, obj.x, obj.y, state_.cue.x, state_.cue.y};
}

bool Env::goal_in_region(Vec2 goal) const {
  switch (spec_.family) {
    case EnvFamily::Reach:
    case EnvFamily::GatedReach:
      return std::abs(goal.x) <= kGoalHalfWidth && std::abs(goal.y) <= kGoalHalfWidth;
    case EnvFamily::PushBlock: return std::abs(goal.x) <= 0.6 && std::abs(goal.y) <= 0.6;
    case EnvFamily::ConflictReach: {
      const double r = std::hypot(goal.x, goal.y);
      return r >= kCueMinRadius - 1e-12 && r <= kCueMaxRadius + 1e-12;
    }
  }
  return false;
}

double Env::reward() const {
  switch (spec_.family) {
    case EnvFamily::Reach:
    case EnvFamily::ConflictReach: return -distance(state_.agent, state_.goal);
    case EnvFamily::PushBlock:
      return -0.5 * (distance(*state_.object, state_.goal) + distance(state_.agent, *state_.object));
    case EnvFamily::GatedReach:
      if (state_.gate_passed) return -0.5 * distance(state_.agent, state_.goal);
      return -0.5 * (distance(state_.agent, spec_.gate) + distance(spec_.gate, state_.goal));
  }
  return 0.0;
}

bool Env::at_goal() const {
  switch (spec_.family) {
    case EnvFamily::PushBlock: return distance(*state_.object, state_.goal) < spec_.success_radius;
    case EnvFamily::GatedReach:
      return state_.gate_passed && distance(state_.agent, state_.goal) < spec_.success_radius;
    default: return distance(state_.agent, state_.goal) < spec_.success_radius;
  }
}

StepResult Env::step(std::span<const double> action) {
  if (!started_) throw ContractError("env " + spec_.id + ": step before reset");
  if (done_) throw ContractError("env " + spec_.id + ": step after episode end");
  if (action.size() != spec_.action_dim) throw DimensionError("env " + spec_.id + ": action must have 2 components");

  const Vec2 a{std::clamp(action[0], -1.0, 1.0), std::clamp(action[1], -1.0, 1.0)};
  const Vec2 before = state_.agent;
  state_.agent = clamp_arena({before.x + kStepScale * a.x, before.y + kStepScale * a.y});
  if (spec_.family == EnvFamily::PushBlock && distance(state_.agent, *state_.object) < kContactRadius) {
    const Vec2 moved{state_.agent.x - before.x, state_.agent.y - before.y};
    state_.object = clamp_arena({state_.object->x + moved.x, state_.object->y + moved.y});
  }
  if (spec_.family == EnvFamily::GatedReach && !state_.gate_passed &&
      distance(state_.agent, spec_.gate) < kGateRadius) {
    state_.gate_passed = true;
  }
  ++state_.step;
  done_ = state_.step >= spec_.horizon;

  // A conflict task is judged on where the agent ends up; the others on
  // whether the goal was ever reached.
  if (spec_.family == EnvFamily::ConflictReach) {
    success_ = done_ && at_goal();
  } else {
    success_ = success_ || at_goal();
  }
  return {observation(), reward(), done_, success_};
}

EnvSpec make_env_spec(const std::string& id) {
  EnvSpec s;
  s.id = id;
  if (id == "reach") {
    s.family = EnvFamily::Reach;
  } else if (id == "conflict-reach-pos" || id == "conflict-reach-neg") {
    s.family = EnvFamily::ConflictReach;
    s.polarity = id.ends_with("pos") ? 1.0 : -1.0;
  } else if (id == "conflict-reach-ortho-pos" || id == "conflict-reach-ortho-neg") {
    s.family = EnvFamily::ConflictReach;
    s.polarity = id.ends_with("pos") ? 1.0 : -1.0;
    s.rotation = std::numbers::pi / 2.0;
  } else if (id == "push-block") {
    s.family = EnvFamily::PushBlock;
  } else if (id == "gated-reach-north") {
    s.family = EnvFamily::GatedReach;
    s.gate = {0.0, 0.6};
  } else if (id == "gated-reach-south") {
    s.family = EnvFamily::GatedReach;
    s.gate = {0.0, -0.6};
  } else {
    throw ConfigError("unknown environment id '" + id + "'");
  }
  return s;
}

std::vector<std::string> registered_envs() {
  return {"reach",           "conflict-reach-pos", "conflict-reach-neg", "conflict-reach-ortho-pos",
          "conflict-reach-ortho-neg", "push-block", "gated-reach-north",  "gated-reach-south"};
}

EnvSuite::EnvSuite(const std::vector<std::string>& env_ids) {
  if (env_ids.empty()) throw ConfigError("a suite needs at least one environment");
  for (const auto& id : env_ids) envs_.emplace_back(make_env_spec(id));
}

std::vector<std::string> EnvSuite::suite_members(const std::string& suite_id) {
  if (suite_id == "reach") return {"reach"};
  if (suite_id == "conflict-pair") return {"conflict-reach-pos", "conflict-reach-neg"};
  if (suite_id == "mt4-toy") return {"reach", "conflict-reach-pos", "conflict-reach-neg", "push-block"};
  if (suite_id == "mt8-toy") {
    return {"reach",      "conflict-reach-pos", "conflict-reach-neg", "push-block", "gated-reach-north",
            "gated-reach-south", "conflict-reach-ortho-pos", "conflict-reach-ortho-neg"};
  }
  throw ConfigError("unknown suite id '" + suite_id + "'");
}

EnvSuite EnvSuite::from_id(const std::string& suite_id) { return EnvSuite(suite_members(suite_id)); }

}  // namespace ptsl
