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

#include "ptsl/sac.hpp"

#include <cmath>
#include <numbers>

#include "ptsl/errors.hpp"

namespace ptsl {

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (buffer_capacity_per_task == 0) throw ConfigError("buffer capacity must be positive");
  if (!(init_alpha > 0.0)) throw ConfigError("initial temperature must be positive");
  if (!(log_std_min < log_std_max)) throw ConfigError("log_std bounds are inverted");
}

void AgentSpec::validate() const {
  if (num_tasks == 0 || action_dim == 0) throw ConfigError("agent needs tasks and actions");
  if (actor.backbone.num_tasks != num_tasks || critic.backbone.num_tasks != num_tasks)
    throw ConfigError("actor/critic task counts disagree with the agent");
  if (actor.backbone.output_dim != 2 * action_dim) throw ConfigError("actor output must be 2 x action_dim");
  if (actor.extra_input != 0) throw ConfigError("actor takes no extra input");
  if (critic.backbone.output_dim != 1) throw ConfigError("critic output must be scalar");
  if (critic.extra_input != action_dim) throw ConfigError("critic extra input must be the action");
  if (actor.state_dim != critic.state_dim) throw ConfigError("actor and critic state widths differ");
}

std::size_t count_agent_parameters(const AgentSpec& spec, AgentCountOptions options) {
  const std::size_t critics = options.include_targets ? 4 : 2;
  return spec.actor.count() + critics * spec.critic.count() + (options.include_alphas ? spec.num_tasks : 0);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Clears requires_grad on a parameter set for the guard's lifetime.
class FreezeGuard {
 public:
  explicit FreezeGuard(ParameterList params) : params_(std::move(params)) { set_requires_grad(params_, false); }
  ~FreezeGuard() { set_requires_grad(params_, true); }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  ParameterList params_;
};

}  // namespace

SacAgent::SacAgent(const AgentSpec& spec, const SacConfig& config, std::uint64_t seed)
    : spec_(spec),
      config_(config),
      rng_(mix_seed(seed, 0)),
      actor_(spec.actor, mix_seed(seed, 1)),
      critic1_(spec.critic, mix_seed(seed, 2)),
      critic2_(spec.critic, mix_seed(seed, 3)),
      target1_(critic1_.clone(false)),
      target2_(critic2_.clone(false)),
      log_alpha_(spec.num_tasks, std::log(config.init_alpha)),
      alpha_m_(spec.num_tasks, 0.0),
      alpha_v_(spec.num_tasks, 0.0),
      alpha_t_(spec.num_tasks, 0) {
  spec_.validate();
  config_.validate();
  const AdamOptions opt{config_.lr};
  actor_opt_ = Adam(actor_.parameters(), opt);
  critic_opt_ = Adam(critic_parameters(), opt);
}

void SacAgent::check_task(int task) const {
  if (task < 0 || static_cast<std::size_t>(task) >= spec_.num_tasks)
    throw TaskError("task id " + std::to_string(task) + " out of range");
}

double SacAgent::alpha(int task) const { return std::exp(log_alpha(task)); }
double SacAgent::log_alpha(int task) const {
  check_task(task);
  return log_alpha_[static_cast<std::size_t>(task)];
}
void SacAgent::set_log_alpha(int task, double value) {
  check_task(task);
  log_alpha_[static_cast<std::size_t>(task)] = value;
}
std::vector<double> SacAgent::log_alphas() const { return log_alpha_; }
void SacAgent::set_log_alphas(std::span<const double> values) {
  if (values.size() != log_alpha_.size()) throw DimensionError("one log temperature per task required");
  log_alpha_.assign(values.begin(), values.end());
}

ParameterList SacAgent::critic_parameters() const {
  ParameterList out;
  for (auto p : critic1_.parameters()) out.push_back({"critic1." + p.name, p.tensor});
  for (auto p : critic2_.parameters()) out.push_back({"critic2." + p.name, p.tensor});
  return out;
}

ParameterList SacAgent::target_parameters() const {
  ParameterList out;
  for (auto p : target1_.parameters()) out.push_back({"critic1." + p.name, p.tensor});
  for (auto p : target2_.parameters()) out.push_back({"critic2." + p.name, p.tensor});
  return out;
}

ad::Tensor SacAgent::standard_normal(std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = unit(rng_);
  return ad::Tensor::from_values({rows, cols}, std::move(v));
}

PolicyOutput SacAgent::policy(ad::Tape& tape, const ad::Tensor& states, std::span<const int> task_ids,
                              const ad::Tensor& noise) const {
  const std::size_t A = spec_.action_dim;
  if (noise.shape() != ad::Shape{states.rows(), A}) throw DimensionError("policy noise must be B x action_dim");
  const ad::Tensor out = actor_.forward(tape, states, task_ids);
  const ad::Tensor mu = ad::slice_cols(tape, out, 0, A);
  const ad::Tensor log_std = ad::clamp(tape, ad::slice_cols(tape, out, A, 2 * A), config_.log_std_min,
                                       config_.log_std_max);
  const ad::Tensor u = ad::add(tape, mu, ad::mul(tape, ad::exp(tape, log_std), noise));

  // log N(u; mu, sigma) = -eps^2/2 - log sigma - log(2 pi)/2 at fixed eps.
  std::vector<double> c(noise.size());
  const auto eps = noise.values();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = -0.5 * eps[k] * eps[k] - half_log_2pi;
  const ad::Tensor gauss = ad::sub(tape, ad::Tensor::from_values(noise.shape(), std::move(c)), log_std);
  const ad::Tensor log_prob =
      ad::sub(tape, ad::row_sum(tape, gauss), ad::row_sum(tape, ad::log1m_tanh_sq(tape, u)));
  return {ad::tanh(tape, u), log_prob, u};
}

ActionSample SacAgent::sample_action(std::span<const double> state, int task_id, bool stochastic) {
  check_task(task_id);
  if (state.size() != spec_.actor.state_dim) throw DimensionError("state width mismatch");
  ad::Tape tape(false);
  const ad::Tensor s = ad::Tensor::from_values({1, state.size()}, {state.begin(), state.end()});
  const ad::Tensor noise = stochastic ? standard_normal(1, spec_.action_dim) : ad::Tensor::zeros({1, spec_.action_dim});
  const std::vector<int> ids{task_id};
  const PolicyOutput out = policy(tape, s, ids, noise);
  const auto a = out.action.values();
  return {{a.begin(), a.end()}, out.log_prob.item()};
}

ad::Tensor SacAgent::min_q(ad::Tape& tape, const ad::Tensor& states, std::span<const int> task_ids,
                           const ad::Tensor& actions) const {
  return ad::minimum(tape, critic1_.forward(tape, states, task_ids, &actions),
                     critic2_.forward(tape, states, task_ids, &actions));
}

std::vector<double> SacAgent::td_targets(const Batch& batch, const ad::Tensor& next_noise) const {
  if (batch.size() == 0) throw ContractError("empty batch");
  ad::Tape tape(false);
  const PolicyOutput next = policy(tape, batch.next_states, batch.task_ids, next_noise);
  const ad::Tensor tq = ad::minimum(tape, target1_.forward(tape, batch.next_states, batch.task_ids, &next.action),
                                    target2_.forward(tape, batch.next_states, batch.task_ids, &next.action));
  std::vector<double> y(batch.size());
  const auto r = batch.rewards.values();
  const auto d = batch.dones.values();
  const auto q = tq.values();
  const auto lp = next.log_prob.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = std::exp(log_alpha_[static_cast<std::size_t>(batch.task_ids[i])]);
    y[i] = r[i] + config_.gamma * (1.0 - d[i]) * (q[i] - a * lp[i]);
  }
  return y;
}

CriticLosses SacAgent::critic_update(const Batch& batch) {
  if (batch.size() == 0) throw ContractError("empty batch");
  return critic_update(batch, standard_normal(batch.size(), spec_.action_dim));
}

std::pair<ad::Tensor, ad::Tensor> SacAgent::critic_losses(ad::Tape& tape, const Batch& batch,
                                                         std::span<const double> targets) const {
  if (targets.size() != batch.size()) throw DimensionError("one target per transition required");
  const ad::Tensor y = ad::Tensor::from_values({batch.size(), 1}, {targets.begin(), targets.end()});
  const ad::Tensor q1 = critic1_.forward(tape, batch.states, batch.task_ids, &batch.actions);
  const ad::Tensor q2 = critic2_.forward(tape, batch.states, batch.task_ids, &batch.actions);
  return {ad::mean(tape, ad::square(tape, ad::sub(tape, q1, y))), ad::mean(tape, ad::square(tape, ad::sub(tape, q2, y)))};
}

ad::Tensor SacAgent::actor_loss(ad::Tape& tape, const Batch& batch, const ad::Tensor& noise, PolicyOutput* out) const {
  const PolicyOutput pol = policy(tape, batch.states, batch.task_ids, noise);
  const ad::Tensor q = min_q(tape, batch.states, batch.task_ids, pol.action);
  std::vector<double> alphas(batch.size());
  for (std::size_t i = 0; i < alphas.size(); ++i)
    alphas[i] = std::exp(log_alpha_[static_cast<std::size_t>(batch.task_ids[i])]);
  const ad::Tensor alpha_col = ad::Tensor::from_values({batch.size(), 1}, std::move(alphas));
  if (out) *out = pol;
  return ad::mean(tape, ad::sub(tape, ad::mul(tape, pol.log_prob, alpha_col), q));
}

CriticLosses SacAgent::critic_update(const Batch& batch, const ad::Tensor& next_noise) {
  if (batch.size() == 0) throw ContractError("empty batch");
  for (int id : batch.task_ids) check_task(id);
  const std::vector<double> y = td_targets(batch, next_noise);
  ad::Tape tape;
  const auto [l1, l2] = critic_losses(tape, batch, y);
  const ad::Tensor loss = ad::add(tape, l1, l2);
  critic_opt_.zero_grad();
  tape.backward(loss);
  critic_opt_.step();
  return {l1.item(), l2.item()};
}

std::vector<std::optional<double>> SacAgent::alpha_gradients(std::span<const int> task_ids,
                                                             std::span<const double> log_probs) const {
  if (task_ids.size() != log_probs.size()) throw DimensionError("one log-prob per task id required");
  std::vector<double> sum(spec_.num_tasks, 0.0);
  std::vector<std::size_t> n(spec_.num_tasks, 0);
  for (std::size_t i = 0; i < task_ids.size(); ++i) {
    check_task(task_ids[i]);
    const auto t = static_cast<std::size_t>(task_ids[i]);
    sum[t] += log_probs[i] + target_entropy();
    ++n[t];
  }
  std::vector<std::optional<double>> grads(spec_.num_tasks);
  for (std::size_t t = 0; t < spec_.num_tasks; ++t) {
    if (n[t] > 0) grads[t] = -sum[t] / static_cast<double>(n[t]);
  }
  return grads;
}

ActorLosses SacAgent::actor_and_alpha_update(const Batch& batch) {
  if (batch.size() == 0) throw ContractError("empty batch");
  return actor_and_alpha_update(batch, standard_normal(batch.size(), spec_.action_dim));
}

ActorLosses SacAgent::actor_and_alpha_update(const Batch& batch, const ad::Tensor& noise) {
  if (batch.size() == 0) throw ContractError("empty batch");
  for (int id : batch.task_ids) check_task(id);
  ActorLosses losses;
  std::vector<double> log_probs;
  {
    const FreezeGuard frozen(critic_parameters());
    ad::Tape tape;
    PolicyOutput pol;
    const ad::Tensor loss = actor_loss(tape, batch, noise, &pol);
    actor_opt_.zero_grad();
    tape.backward(loss);
    actor_opt_.step();
    losses.actor = loss.item();
    const auto lp = pol.log_prob.values();
    log_probs.assign(lp.begin(), lp.end());
  }

  double mean_lp = 0.0;
  for (double v : log_probs) mean_lp += v;
  losses.mean_log_prob = mean_lp / static_cast<double>(log_probs.size());

  const auto grads = alpha_gradients(batch.task_ids, log_probs);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    if (!grads[t]) continue;
    const double g = *grads[t];
    // loss_t = -log_alpha[t] * mean_t(log_pi + target_entropy) and g = dloss_t/dlog_alpha[t]
    losses.alpha += g * log_alpha_[t];
    ++alpha_t_[t];
    alpha_m_[t] = b1 * alpha_m_[t] + (1.0 - b1) * g;
    alpha_v_[t] = b2 * alpha_v_[t] + (1.0 - b2) * g * g;
    const double mh = alpha_m_[t] / (1.0 - std::pow(b1, static_cast<double>(alpha_t_[t])));
    const double vh = alpha_v_[t] / (1.0 - std::pow(b2, static_cast<double>(alpha_t_[t])));
    log_alpha_[t] -= config_.lr * mh / (std::sqrt(vh) + eps);
  }
  return losses;
}

void SacAgent::soft_target_update(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ContractError("soft target tau must lie in (0, 1]");
  ParameterList t1 = target1_.parameters();
  ParameterList t2 = target2_.parameters();
  blend_values(critic1_.parameters(), t1, tau);
  blend_values(critic2_.parameters(), t2, tau);
}

std::pair<CriticLosses, ActorLosses> SacAgent::update(const Batch& batch) {
  const CriticLosses c = critic_update(batch);
  const ActorLosses a = actor_and_alpha_update(batch);
  soft_target_update(config_.tau);
  return {c, a};
}

}  // namespace ptsl
