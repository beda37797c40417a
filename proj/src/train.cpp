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

#include "ptsl/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ptsl/checkpoint.hpp"
#include "ptsl/errors.hpp"

namespace ptsl {

namespace {

std::uint64_t splitmix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string MetricsLog::to_csv() const {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + std::to_string(r.task_id) + "," + format_real(r.success_rate) + "," +
           format_real(r.actor_loss) + "," + format_real(r.critic_loss) + "," + format_real(r.alpha) + "\n";
  }
  return out;
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_csv();
}

MetricsLog MetricsLog::parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kHeader) throw ConfigError("metrics CSV has an unexpected header");
  MetricsLog log;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    MetricsRow r;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 6) throw ConfigError("metrics CSV row has " + std::to_string(f.size()) + " fields");
    r.step = std::stoull(f[0]);
    r.task_id = std::stoi(f[1]);
    r.success_rate = std::strtod(f[2].c_str(), nullptr);
    r.actor_loss = std::strtod(f[3].c_str(), nullptr);
    r.critic_loss = std::strtod(f[4].c_str(), nullptr);
    r.alpha = std::strtod(f[5].c_str(), nullptr);
    log.rows.push_back(r);
  }
  return log;
}

MetricsLog MetricsLog::read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_csv(ss.str());
}

double evaluate_task(SacAgent& agent, EnvSuite& suite, int task, std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) return 0.0;
  Env& env = suite.env(static_cast<std::size_t>(task));
  std::size_t wins = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    auto obs = env.reset(splitmix(seed, e));
    for (int k = 0; k < env.spec().horizon; ++k) {
      const auto a = agent.sample_action(obs, task, false);
      obs = env.step(a.action).observation;
    }
    wins += env.success() ? 1 : 0;
  }
  return static_cast<double>(wins) / static_cast<double>(episodes);
}

MetricsLog train(SacAgent& agent, EnvSuite& suite, const TrainConfig& config) {
  MetricsLog log;
  if (config.steps_per_task == 0) return log;
  const std::size_t T = suite.num_tasks();
  if (agent.spec().num_tasks != T) throw ConfigError("agent and suite disagree on the number of tasks");
  const SacConfig& sac = agent.config();

  ReplayBuffer buffer(sac.buffer_capacity_per_task * T, T);
  Rng rng(splitmix(config.seed, 17));
  std::uniform_real_distribution<double> uniform_action(-1.0, 1.0);

  std::vector<std::size_t> steps(T, 0);
  std::size_t next_eval = config.eval_interval > 0 ? config.eval_interval : config.steps_per_task;
  std::size_t next_ckpt = config.checkpoint_interval;
  double actor_sum = 0.0, critic_sum = 0.0;
  std::size_t updates = 0;

  while (steps[0] < config.steps_per_task) {
    for (std::size_t t = 0; t < T; ++t) {
      const int task = static_cast<int>(t);
      Env& env = suite.env(t);
      auto obs = env.reset(rng());
      const std::size_t len =
          std::min<std::size_t>(static_cast<std::size_t>(env.spec().horizon), config.steps_per_task - steps[t]);
      for (std::size_t k = 0; k < len; ++k) {
        std::vector<double> action(suite.action_dim());
        if (steps[t] < sac.warmup_steps_per_task) {
          for (double& v : action) v = uniform_action(rng);
        } else {
          action = agent.sample_action(obs, task, true).action;
        }
        StepResult res = env.step(action);
        // Episodes only end by time limit, which is not a terminal state.
        buffer.add({obs, action, res.reward, res.observation, false, task});
        obs = std::move(res.observation);
        ++steps[t];

        if (steps[t] > sac.warmup_steps_per_task && buffer.size() >= sac.batch_size) {
          const Batch batch = buffer.sample(sac.batch_size, rng);
          const auto [c, a] = agent.update(batch);
          if (!std::isfinite(c.total()) || !std::isfinite(a.actor) || !std::isfinite(a.alpha)) {
            std::ostringstream os;
            os << "non-finite loss at step " << steps[t] << " of task " << task << ": critic=" << c.total()
               << " actor=" << a.actor << " alpha_loss=" << a.alpha << " log_alpha=[";
            for (std::size_t j = 0; j < T; ++j) os << (j ? "," : "") << agent.log_alpha(static_cast<int>(j));
            os << "]";
            throw NumericalError(os.str());
          }
          actor_sum += a.actor;
          critic_sum += c.total();
          ++updates;
        }
      }
    }

    const std::size_t done = steps[0];
    if (done >= next_eval || done == config.steps_per_task) {
      const double actor_loss = updates ? actor_sum / static_cast<double>(updates) : 0.0;
      const double critic_loss = updates ? critic_sum / static_cast<double>(updates) : 0.0;
      double success_total = 0.0, alpha_total = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const int task = static_cast<int>(t);
        const double s = evaluate_task(agent, suite, task, config.eval_episodes, splitmix(config.seed, 1000 + t));
        log.rows.push_back({done, task, s, actor_loss, critic_loss, agent.alpha(task)});
        success_total += s;
        alpha_total += agent.alpha(task);
      }
      log.rows.push_back({done, -1, success_total / static_cast<double>(T), actor_loss, critic_loss,
                          alpha_total / static_cast<double>(T)});
      actor_sum = critic_sum = 0.0;
      updates = 0;
      while (next_eval <= done) next_eval += config.eval_interval > 0 ? config.eval_interval : config.steps_per_task;
    }
    if (config.checkpoint_interval > 0 && done >= next_ckpt) {
      save_agent(config.checkpoint_dir / ("step-" + std::to_string(done)), agent);
      while (next_ckpt <= done) next_ckpt += config.checkpoint_interval;
    }
  }
  return log;
}

}  // namespace ptsl
