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

// Multi-task soft actor-critic with one entropy temperature per task.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ptsl/network.hpp"
#include "ptsl/replay.hpp"

namespace ptsl {

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  std::size_t batch_size = 256;
  std::size_t warmup_steps_per_task = 1000;
  std::size_t buffer_capacity_per_task = 100000;
  double init_alpha = 1.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  void validate() const;
  friend bool operator==(const SacConfig&, const SacConfig&) = default;
};

/// Actor maps state -> (mean, log_std) per action dimension; critics map
/// state (+) action -> Q.
struct AgentSpec {
  NetworkSpec actor;
  NetworkSpec critic;
  std::size_t num_tasks = 1;
  std::size_t action_dim = 1;

  void validate() const;
  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct AgentCountOptions {
  bool include_targets = true;
  bool include_alphas = true;
};

/// Actor + two critics (+ two target critics) (+ one temperature per task).
std::size_t count_agent_parameters(const AgentSpec& spec, AgentCountOptions options = {});

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

struct PolicyOutput {
  ad::Tensor action;    // B x A, tanh-squashed
  ad::Tensor log_prob;  // B x 1
  ad::Tensor pre_tanh;  // B x A
};

struct CriticLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  [[nodiscard]] double total() const { return critic1 + critic2; }
};

struct ActorLosses {
  double actor = 0.0;
  double alpha = 0.0;  // sum of per-task temperature losses
  double mean_log_prob = 0.0;
};

class SacAgent {
 public:
  SacAgent(const AgentSpec& spec, const SacConfig& config, std::uint64_t seed);

  /// tanh(mu + sigma * eps) with the tanh log-det correction; tanh(mu) with
  /// log_prob evaluated at eps = 0 when stochastic is false.
  ActionSample sample_action(std::span<const double> state, int task_id, bool stochastic);

  /// Reparameterized policy on a batch with caller-provided standard normal
  /// noise (B x A).
  PolicyOutput policy(ad::Tape& tape, const ad::Tensor& states, std::span<const int> task_ids,
                      const ad::Tensor& noise) const;

  /// y = r + gamma (1 - done) (min target Q(s', a') - alpha[task] log pi(a'|s')).
  [[nodiscard]] std::vector<double> td_targets(const Batch& batch, const ad::Tensor& next_noise) const;

  /// Mean squared error of each online critic against fixed targets.
  std::pair<ad::Tensor, ad::Tensor> critic_losses(ad::Tape& tape, const Batch& batch,
                                                  std::span<const double> targets) const;
  /// mean(alpha[task] log pi - min Q) through the reparameterized action.
  ad::Tensor actor_loss(ad::Tape& tape, const Batch& batch, const ad::Tensor& noise, PolicyOutput* out = nullptr) const;

  CriticLosses critic_update(const Batch& batch);
  CriticLosses critic_update(const Batch& batch, const ad::Tensor& next_noise);
  ActorLosses actor_and_alpha_update(const Batch& batch);
  ActorLosses actor_and_alpha_update(const Batch& batch, const ad::Tensor& noise);
  void soft_target_update(double tau);

  /// Critic step, actor/temperature step, then a soft target update.
  std::pair<CriticLosses, ActorLosses> update(const Batch& batch);

  /// d/d log_alpha[t] of mean_t(-log_alpha[t] * (log_pi + target_entropy));
  /// nullopt for tasks with no sample in the batch.
  [[nodiscard]] std::vector<std::optional<double>> alpha_gradients(std::span<const int> task_ids,
                                                                  std::span<const double> log_probs) const;

  [[nodiscard]] double alpha(int task) const;
  [[nodiscard]] double log_alpha(int task) const;
  void set_log_alpha(int task, double value);
  [[nodiscard]] double target_entropy() const { return -static_cast<double>(spec_.action_dim); }

  [[nodiscard]] const AgentSpec& spec() const { return spec_; }
  [[nodiscard]] const SacConfig& config() const { return config_; }
  [[nodiscard]] const TaskNetwork& actor() const { return actor_; }
  [[nodiscard]] const TaskNetwork& critic(int which) const { return which == 0 ? critic1_ : critic2_; }
  [[nodiscard]] const TaskNetwork& target_critic(int which) const { return which == 0 ? target1_ : target2_; }
  [[nodiscard]] ParameterList critic_parameters() const;
  [[nodiscard]] ParameterList target_parameters() const;
  [[nodiscard]] std::vector<double> log_alphas() const;
  void set_log_alphas(std::span<const double> values);
  Rng& rng() { return rng_; }

  /// Minimum of the two online critics on (states, actions).
  ad::Tensor min_q(ad::Tape& tape, const ad::Tensor& states, std::span<const int> task_ids,
                   const ad::Tensor& actions) const;

 private:
  ad::Tensor standard_normal(std::size_t rows, std::size_t cols);
  void check_task(int task) const;

  AgentSpec spec_;
  SacConfig config_;
  Rng rng_;
  TaskNetwork actor_;
  TaskNetwork critic1_;
  TaskNetwork critic2_;
  TaskNetwork target1_;
  TaskNetwork target2_;
  std::vector<double> log_alpha_;
  Adam actor_opt_;
  Adam critic_opt_;
  // Per-task scalar Adam state for the temperatures; a task with no sample in
  // a batch does not advance.
  std::vector<double> alpha_m_, alpha_v_;
  std::vector<std::int64_t> alpha_t_;
};

}  // namespace ptsl
