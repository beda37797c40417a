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

#include "checks.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "ptsl/envs.hpp"
#include "ptsl/network.hpp"
#include "ptsl/replay.hpp"
#include "ptsl/sac.hpp"

namespace ptsl::oracle {

namespace {

constexpr double kStep = 1e-5;
constexpr double kGradTol = 1e-4;

ad::Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(r * c);
  for (double& x : v) x = dist(rng);
  return ad::Tensor::from_values({r, c}, std::move(v));
}

CheckResult grad_check(const std::string& name, const std::function<ad::Tensor(ad::Tape&)>& loss,
                       const ParameterList& params) {
  const GradCheckResult g = finite_difference(loss, params, kStep);
  CheckResult r{name, g.max_rel_error, kGradTol, g.max_rel_error < kGradTol, ""};
  r.detail = std::to_string(g.scalars) + " scalars, worst " + g.worst;
  return r;
}

CheckResult compare(const std::string& name, double err, double tol, const std::string& detail = "") {
  return {name, err, tol, err < tol, detail};
}

std::vector<Transition> random_transitions(std::size_t n, std::size_t s, std::size_t a, std::size_t tasks,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> out;
  for (std::size_t k = 0; k < n; ++k) {
    Transition t;
    for (std::size_t i = 0; i < s; ++i) t.state.push_back(u(rng));
    for (std::size_t i = 0; i < a; ++i) t.action.push_back(0.9 * u(rng));
    for (std::size_t i = 0; i < s; ++i) t.next_state.push_back(u(rng));
    t.reward = u(rng);
    t.done = k % 3 == 0;
    t.task_id = static_cast<int>(k % tasks);
    out.push_back(t);
  }
  return out;
}

AgentSpec small_agent(BodyKind body, EncoderKind enc) {
  AgentSpec spec;
  spec.num_tasks = 3;
  spec.action_dim = 2;
  NetworkSpec net;
  net.state_dim = 4;
  net.body = body;
  net.task_onehot = body == BodyKind::Dense;
  net.encoder.kind = enc;
  net.encoder.num_experts = 2;
  net.encoder.expert_hidden = 5;
  net.encoder.context_dim = 3;
  net.encoder.attention_hidden = 4;
  net.encoder.output_dim = 4;
  net.backbone.hidden_dim = 6;
  net.backbone.task_dim = 3;
  net.backbone.num_hidden = 1;
  net.backbone.num_tasks = 3;
  spec.actor = net;
  spec.actor.backbone.output_dim = 4;
  spec.critic = net;
  spec.critic.extra_input = 2;
  spec.critic.backbone.output_dim = 1;
  return spec;
}

}  // namespace

std::vector<CheckResult> gradient_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);

  for (auto proj : {ProjectionMode::Shared, ProjectionMode::Independent}) {
    for (auto res : {ResidualMode::None, ResidualMode::Addition, ResidualMode::LearnableSum,
                     ResidualMode::LearnableProjection}) {
      NetworkConfig c;
      c.input_dim = 4;
      c.output_dim = 3;
      c.hidden_dim = 6;
      c.task_dim = 2;
      c.num_tasks = 3;
      c.num_hidden = 2;
      c.projection_mode = proj;
      c.residual_mode = res;
      const PtslBackbone net(c, seed);
      const ParameterList params = net.parameters();
      randomize(params, seed + out.size());
      const ad::Tensor x = random_matrix(6, 4, rng);
      const std::vector<int> ids{0, 1, 2, 0, 1, 2};
      out.push_back(grad_check("backbone/" + to_string(proj) + "/" + to_string(res),
                               [&](ad::Tape& t) { return ad::mean(t, ad::square(t, net.forward(t, x, ids))); },
                               params));
    }
  }
  {
    NetworkConfig c;
    c.input_dim = 4;
    c.output_dim = 2;
    c.hidden_dim = 5;
    c.task_dim = 2;
    c.num_tasks = 2;
    c.num_hidden = 1;
    c.first_layer_down_projection = false;
    c.last_layer_up_projection = true;
    c.residual_mode = ResidualMode::LearnableSum;
    const PtslBackbone net(c, seed);
    const ParameterList params = net.parameters();
    randomize(params, seed + 100);
    const ad::Tensor x = random_matrix(4, 4, rng);
    const std::vector<int> ids{1, 0, 1, 0};
    out.push_back(grad_check("backbone/boundary-flipped",
                             [&](ad::Tape& t) { return ad::mean(t, ad::square(t, net.forward(t, x, ids))); }, params));
  }
  {
    EncoderConfig e;
    e.kind = EncoderKind::CareMixture;
    e.num_experts = 3;
    e.expert_hidden = 5;
    e.context_dim = 4;
    e.attention_hidden = 6;
    e.output_dim = 4;
    const TaskEncoder enc(e, 5, 3, seed);
    const ParameterList params = enc.parameters();
    randomize(params, seed + 200);
    const ad::Tensor x = random_matrix(6, 5, rng);
    const std::vector<int> ids{2, 1, 0, 2, 1, 0};
    out.push_back(grad_check("encoder/care",
                             [&](ad::Tape& t) { return ad::mean(t, ad::square(t, enc.encode(t, x, ids))); }, params));
  }
  for (auto body : {BodyKind::Ptsl, BodyKind::Dense}) {
    const AgentSpec spec = small_agent(body, body == BodyKind::Ptsl ? EncoderKind::CareMixture : EncoderKind::Identity);
    SacConfig sc;
    SacAgent agent(spec, sc, seed);
    const ParameterList actor = agent.actor().parameters();
    randomize(actor, seed + 300, 0.4);
    ParameterList critics = agent.critic_parameters();
    randomize(critics, seed + 301, 0.4);
    const Batch batch = make_batch(random_transitions(6, 4, 2, 3, rng));
    const ad::Tensor noise = random_matrix(6, 2, rng);
    const std::string tag = to_string(body);
    out.push_back(grad_check("actor-log-prob/" + tag, [&](ad::Tape& t) {
      return ad::mean(t, agent.policy(t, batch.states, batch.task_ids, noise).log_prob);
    }, actor));
    set_requires_grad(critics, false);
    out.push_back(grad_check("actor-loss-frozen-critic/" + tag,
                             [&](ad::Tape& t) { return agent.actor_loss(t, batch, noise); }, actor));
    set_requires_grad(critics, true);
    std::vector<double> y;
    for (std::size_t k = 0; k < batch.size(); ++k) y.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
    out.push_back(grad_check("critic-loss/" + tag, [&](ad::Tape& t) {
      const auto [l1, l2] = agent.critic_losses(t, batch, y);
      return ad::add(t, l1, l2);
    }, critics));
  }
  return out;
}

std::vector<CheckResult> derived_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);

  {
    const ad::Tensor a = random_matrix(3, 4, rng);
    const ad::Tensor b = random_matrix(4, 2, rng);
    ad::Tensor a_leaf = ad::Tensor::from_values(a.shape(), {a.values().begin(), a.values().end()}, true);
    ad::Tensor b_leaf = ad::Tensor::from_values(b.shape(), {b.values().begin(), b.values().end()}, true);
    const auto g = finite_difference([&](ad::Tape& t) { return ad::sum(t, ad::matmul(t, a_leaf, b_leaf)); },
                                     {{"a", a_leaf}, {"b", b_leaf}});
    out.push_back(compare("matmul-sum-gradient", g.max_rel_error, 1e-6));
  }
  {
    NetworkConfig c;
    c.input_dim = 3;
    c.hidden_dim = 5;
    c.task_dim = 2;
    c.output_dim = 2;
    c.num_tasks = 2;
    c.num_hidden = 2;
    c.residual_mode = ResidualMode::LearnableProjection;
    const PtslBackbone net(c, seed);
    randomize(net.parameters(), seed);
    double worst = 0.0;
    for (int task = 0; task < 2; ++task) {
      const ad::Tensor x = random_matrix(1, 3, rng);
      ad::Tape tape(false);
      const ad::Tensor out_t = net.forward(tape, x, task);
      const auto y = out_t.values();
      const Vec ref = backbone_forward(c, net.parameters(), {x.values().begin(), x.values().end()}, task);
      for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(y[k] - ref[k]));
    }
    out.push_back(compare("backbone-straight-line", worst, 1e-12));
  }
  {
    // Boundary-layer task-side costs.
    const double with_proj = 104.0 * 50 + 10.0 * (50 * 50 + 50);
    const double without_proj = 10.0 * (104 * 50 + 50);
    const double last_direct = 10.0 * (50 * 8 + 8);
    const double last_up = 50.0 * 8 + 10.0 * (50 * 50 + 50);
    out.push_back(compare("first-layer-with-projection", std::abs(with_proj - 30700), 0.5, "30700"));
    out.push_back(compare("first-layer-without-projection", std::abs(without_proj - 52500), 0.5, "52500"));
    out.push_back(compare("last-layer-direct", std::abs(last_direct - 4080), 0.5, "4080"));
    out.push_back(compare("last-layer-with-up", std::abs(last_up - 25900), 0.5, "25900"));
  }
  {
    BudgetSearch s;
    s.base.input_dim = 12;
    s.base.output_dim = 4;
    s.base.num_tasks = 4;
    s.base.num_hidden = 2;
    s.max_hidden = 128;
    s.max_task_dim = 16;
    const auto counter = [](const NetworkConfig& c) { return count_parameters(c).total(); };
    const NetworkConfig fast = budget_match(10000, s, counter);
    const auto slow = exhaustive_budget_search(10000, s, counter);
    const bool same = slow && slow->hidden_dim == fast.hidden_dim && slow->task_dim == fast.task_dim;
    out.push_back({"budget-search-exhaustive", same ? 0.0 : 1.0, 0.5, same,
                   "H=" + std::to_string(fast.hidden_dim) + " D=" + std::to_string(fast.task_dim)});
  }
  {
    EncoderConfig e;
    e.kind = EncoderKind::CareMixture;
    e.num_experts = 3;
    e.expert_hidden = 4;
    e.output_dim = 3;
    const TaskEncoder enc(e, 5, 2, seed);
    const ad::Tensor x = random_matrix(1, 5, rng);
    ad::Tape tape(false);
    const ad::Tensor out_t = enc.encode(tape, x, 1);
    const auto y = out_t.values();
    const Vec ref = mixture_forward(e, enc.parameters(""), 2, {x.values().begin(), x.values().end()}, 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(y[k] - ref[k]));
    out.push_back(compare("mixture-hand-computed", worst, 1e-12));
  }
  {
    const double mu = 0.3, sigma = 0.6, eps = 0.4;
    const double u = mu + sigma * eps;
    const double a = std::tanh(u);
    const double log_prob = -0.5 * eps * eps - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(1.0 - a * a);
    const DensityEstimate est = tanh_gaussian_density(mu, sigma, a, 1000000, 0.005, seed);
    const double z = std::abs(std::exp(log_prob) - est.density) / est.stderr_;
    out.push_back(compare("tanh-gaussian-density", z, 3.0, "standard errors"));
  }
  {
    const double t0 = 0.25, online = -1.5, tau = 0.005;
    const double stepped = (1 - tau) * ((1 - tau) * t0 + tau * online) + tau * online;
    out.push_back(compare("two-step-blend", std::abs(stepped - blend(t0, online, tau, 2)), 1e-12));
  }
  {
    double worst_outside = 0.0;
    for (const auto& id : registered_envs()) {
      Env env(make_env_spec(id));
      for (std::uint64_t k = 0; k < 1000; ++k) {
        env.reset(seed * 1000 + k);
        if (!env.goal_in_region(env.state().goal)) worst_outside += 1.0;
      }
    }
    out.push_back(compare("goal-region-sweep", worst_outside, 0.5, "goals outside region"));
  }
  {
    const GridResult g = best_constant_policy({"conflict-reach-pos", "conflict-reach-neg"}, 41, 50, seed);
    out.push_back({"conflict-constant-policy-grid", g.best_success, 0.5, g.best_success <= 0.5,
                   "best of " + std::to_string(g.policies) + " constant actions (pass when <= 0.5)"});
  }
  {
    const std::vector<std::pair<std::size_t, double>> curve{{2000, 0.1}, {4000, 0.45}, {6000, 0.5}, {8000, 0.9}};
    const auto step = scan_threshold(curve, 0.5);
    out.push_back({"step-to-threshold-scan", step ? static_cast<double>(*step) : -1.0, 0.0, step && *step == 6000,
                   "first step with mean >= 0.5"});
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s %-40s value=%.3e tol=%.1e %s", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                r.tolerance, r.detail.c_str());
  return buf;
}

}  // namespace ptsl::oracle
