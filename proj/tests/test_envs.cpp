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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptsl/envs.hpp"
#include "ptsl/errors.hpp"

namespace ptsl {
namespace {

const std::vector<double> kStill{0.0, 0.0};

TEST(Env, RegisteredEnvsHaveCommonShape) {
  for (const auto& id : registered_envs()) {
    Env env(make_env_spec(id));
    EXPECT_EQ(env.spec().state_dim, 6u) << id;
    EXPECT_EQ(env.spec().action_dim, 2u) << id;
    EXPECT_EQ(env.spec().horizon, 100) << id;
    EXPECT_EQ(env.reset(1).size(), 6u) << id;
  }
  EXPECT_THROW(make_env_spec("reach-v2"), ConfigError);
  EnvSpec bad = make_env_spec("reach");
  bad.horizon = 0;
  EXPECT_THROW(Env{bad}, ConfigError);
}

TEST(Env, ResetIsSeeded) {
  for (const auto& id : registered_envs()) {
    Env a(make_env_spec(id)), b(make_env_spec(id));
    EXPECT_EQ(a.reset(42), b.reset(42)) << id;
    EXPECT_NE(a.reset(42), a.reset(43)) << id;
    EXPECT_EQ(a.state().step, 0) << id;
    EXPECT_FALSE(a.success()) << id;
  }
}

TEST(Env, GoalsStayInTheirRegion) {
  for (const auto& id : registered_envs()) {
    Env env(make_env_spec(id));
    for (std::uint64_t s = 0; s < 2000; ++s) {
      const auto obs = env.reset(s);
      const EnvState& st = env.state();
      ASSERT_TRUE(env.goal_in_region(st.goal)) << id << " seed " << s;
      EXPECT_EQ(obs[4], st.cue.x);
      EXPECT_EQ(obs[5], st.cue.y);
      if (env.spec().family != EnvFamily::ConflictReach) {
        EXPECT_EQ(st.cue, st.goal) << id;
      }
    }
  }
  Env reach(make_env_spec("reach"));
  EXPECT_FALSE(reach.goal_in_region({0.9, 0.0}));
}

TEST(ConflictReach, NegativePolarityMirrorsTheCue) {
  Env pos(make_env_spec("conflict-reach-pos")), neg(make_env_spec("conflict-reach-neg"));
  for (std::uint64_t s = 0; s < 50; ++s) {
    EXPECT_EQ(pos.reset(s), neg.reset(s));
    EXPECT_EQ(pos.state().goal, pos.state().cue);
    EXPECT_DOUBLE_EQ(neg.state().goal.x, -neg.state().cue.x);
    EXPECT_DOUBLE_EQ(neg.state().goal.y, -neg.state().cue.y);
  }
  Env ortho(make_env_spec("conflict-reach-ortho-pos"));
  ortho.reset(3);
  EXPECT_NEAR(ortho.state().goal.x, -ortho.state().cue.y, 1e-12);
  EXPECT_NEAR(ortho.state().goal.y, ortho.state().cue.x, 1e-12);
}

TEST(Env, ZeroActionKeepsPosition) {
  Env env(make_env_spec("reach"));
  env.reset(5);
  const Vec2 start = env.state().agent;
  const StepResult r = env.step(kStill);
  EXPECT_EQ(env.state().agent, start);
  EXPECT_DOUBLE_EQ(r.reward, -distance(start, env.state().goal));
  EXPECT_EQ(env.state().step, 1);
}

TEST(Env, ActionsAreClippedAndScaled) {
  Env env(make_env_spec("reach"));
  env.reset(6);
  EnvState st = env.state();
  st.agent = {0.0, 0.0};
  env.set_state(st);
  env.step(std::vector<double>{5.0, -0.5});
  EXPECT_NEAR(env.state().agent.x, Env::kStepScale, 1e-15);
  EXPECT_NEAR(env.state().agent.y, -0.5 * Env::kStepScale, 1e-15);
  st = env.state();
  st.agent = {0.98, -0.98};
  env.set_state(st);
  env.step(std::vector<double>{1.0, -1.0});
  EXPECT_EQ(env.state().agent, (Vec2{1.0, -1.0}));
}

TEST(Env, AgentOnGoalSucceeds) {
  Env env(make_env_spec("reach"));
  env.reset(7);
  EnvState st = env.state();
  st.agent = st.goal;
  env.set_state(st);
  const StepResult r = env.step(kStill);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(ConflictReach, SuccessIsJudgedAtTheEnd) {
  Env env(make_env_spec("conflict-reach-neg"));
  env.reset(8);
  EnvState st = env.state();
  st.agent = st.goal;
  env.set_state(st);
  StepResult r;
  for (int k = 0; k < env.spec().horizon; ++k) {
    r = env.step(kStill);
    if (k + 1 < env.spec().horizon) {
      EXPECT_FALSE(r.success);
    }
  }
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.success);

  // Passing through the goal and leaving does not count.
  env.reset(8);
  st = env.state();
  st.agent = st.goal;
  env.set_state(st);
  const std::vector<double> away{st.goal.x > 0 ? -1.0 : 1.0, 0.0};
  for (int k = 0; k < env.spec().horizon; ++k) r = env.step(away);
  EXPECT_FALSE(r.success);
}

TEST(PushBlock, ContactMovesTheBlock) {
  Env env(make_env_spec("push-block"));
  env.reset(9);
  EnvState st = env.state();
  st.object = Vec2{0.0, 0.0};
  st.agent = {-0.12, 0.0};
  st.goal = {0.5, 0.5};
  env.set_state(st);
  env.step(std::vector<double>{1.0, 0.0});  // agent at -0.02, in contact
  EXPECT_NEAR(env.state().object->x, 0.1, 1e-12);
  st = env.state();
  st.agent = {-0.8, -0.8};
  env.set_state(st);
  env.step(std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(env.state().object->x, 0.1, 1e-12);
  const auto obs = env.observation();
  EXPECT_EQ(obs[2], env.state().object->x);
}

TEST(PushBlock, SuccessNeedsTheBlockOnTheGoal) {
  Env env(make_env_spec("push-block"));
  env.reset(10);
  EnvState st = env.state();
  st.agent = st.goal;
  st.object = Vec2{st.goal.x > 0 ? -0.5 : 0.5, 0.0};
  env.set_state(st);
  EXPECT_FALSE(env.step(kStill).success);
  st = env.state();
  st.object = st.goal;
  st.agent = {st.goal.x + 0.5 > 1.0 ? st.goal.x - 0.5 : st.goal.x + 0.5, st.goal.y};
  env.set_state(st);
  const StepResult r = env.step(kStill);
  EXPECT_TRUE(r.success);
}

TEST(GatedReach, GoalCountsOnlyAfterTheGate) {
  Env env(make_env_spec("gated-reach-north"));
  env.reset(11);
  EnvState st = env.state();
  st.agent = st.goal;
  env.set_state(st);
  EXPECT_FALSE(env.step(kStill).success);
  st = env.state();
  st.agent = env.spec().gate;
  env.set_state(st);
  env.step(kStill);
  EXPECT_TRUE(env.state().gate_passed);
  EXPECT_EQ(env.observation()[2], 0.0);
  st = env.state();
  st.agent = st.goal;
  env.set_state(st);
  EXPECT_TRUE(env.step(kStill).success);
}

TEST(Env, StepContract) {
  Env env(make_env_spec("reach"));
  EXPECT_THROW(env.step(kStill), ContractError);
  env.reset(12);
  EXPECT_THROW(env.step(std::vector<double>{0.0}), DimensionError);
  StepResult r;
  for (int k = 0; k < env.spec().horizon; ++k) r = env.step(kStill);
  EXPECT_TRUE(r.done);
  EXPECT_THROW(env.step(kStill), ContractError);
  env.reset(12);
  EXPECT_NO_THROW(env.step(kStill));
}

TEST(Env, RewardIsBounded) {
  const double lo = -2.0 * std::sqrt(2.0);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& id : registered_envs()) {
    Env env(make_env_spec(id));
    for (std::uint64_t ep = 0; ep < 30; ++ep) {
      env.reset(ep);
      for (int k = 0; k < env.spec().horizon; ++k) {
        const StepResult r = env.step(std::vector<double>{u(rng), u(rng)});
        ASSERT_GE(r.reward, lo) << id;
        ASSERT_LE(r.reward, 0.0) << id;
      }
    }
  }
}

TEST(Env, TrajectoriesAreDeterministic) {
  for (const auto& id : registered_envs()) {
    Env a(make_env_spec(id)), b(make_env_spec(id));
    a.reset(14);
    b.reset(14);
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      const std::vector<double> act{u(rng), u(rng)};
      const StepResult ra = a.step(act), rb = b.step(act);
      ASSERT_EQ(ra.observation, rb.observation) << id;
      ASSERT_EQ(ra.reward, rb.reward) << id;
      ASSERT_EQ(ra.success, rb.success) << id;
    }
  }
}

TEST(ConflictReach, NoConstantPolicySolvesThePair) {
  const auto grid = oracle::best_constant_policy({"conflict-reach-pos", "conflict-reach-neg"}, 21, 20, 16);
  EXPECT_EQ(grid.policies, 21u * 21u);
  EXPECT_LE(grid.best_success, 0.5 + 0.02);
}

TEST(EnvSuite, KnownSuites) {
  EXPECT_EQ(EnvSuite::suite_members("mt4-toy"),
            (std::vector<std::string>{"reach", "conflict-reach-pos", "conflict-reach-neg", "push-block"}));
  EXPECT_EQ(EnvSuite::suite_members("mt8-toy").size(), 8u);
  EXPECT_EQ(EnvSuite::from_id("conflict-pair").num_tasks(), 2u);
  const EnvSuite s = EnvSuite::from_id("mt4-toy");
  EXPECT_EQ(s.state_dim(), 6u);
  EXPECT_EQ(s.action_dim(), 2u);
  EXPECT_EQ(s.horizon(), 100);
  EXPECT_EQ(s.env(3).spec().family, EnvFamily::PushBlock);
  EXPECT_THROW(EnvSuite::from_id("mt50"), ConfigError);
  EXPECT_THROW(EnvSuite(std::vector<std::string>{}), ConfigError);
}

}  // namespace
}  // namespace ptsl
