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

#include "ptsl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ptsl/checkpoint.hpp"
#include "ptsl/envs.hpp"
#include "ptsl/errors.hpp"

namespace ptsl {

namespace fs = std::filesystem;

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Method make_method(std::string name, BudgetRole role, AgentSpec agent) {
  agent.validate();
  Method m{std::move(name), role, agent, 0};
  m.parameter_count = count_agent_parameters(m.agent);
  return m;
}

// Keeps `widths` when within tolerance of the target, else searches H and D.
Method matched(std::string name, const TaskShape& shape, BodyKind body, bool onehot, const EncoderConfig& enc,
               const NetworkConfig& widths, std::size_t target) {
  const auto counter = [&](const NetworkConfig& c) {
    return count_agent_parameters(make_agent_spec(shape, body, onehot, enc, c));
  };
  NetworkConfig chosen = widths;
  const double gap = std::abs(static_cast<double>(counter(widths)) - static_cast<double>(target)) /
                     static_cast<double>(target);
  if (gap > kBudgetTolerance) {
    BudgetSearch search;
    search.base = widths;
    search.search_task_dim = body == BodyKind::Ptsl;
    search.max_hidden = std::max<std::size_t>(512, widths.hidden_dim * 2);
    chosen = budget_match(target, search, counter);
  }
  return make_method(std::move(name), BudgetRole::Matched, make_agent_spec(shape, body, onehot, enc, chosen));
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string seed_stem(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "method,task_id,step,n,mean_success,stderr_success\n";
  for (const auto& r : rows) {
    out += r.method + "," + std::to_string(r.task_id) + "," + std::to_string(r.step) + "," + std::to_string(r.n) + "," +
           fmt_real(r.mean) + "," + fmt_real(r.stderr_) + "\n";
  }
  return out;
}

}  // namespace

TaskShape TaskShape::of_suite(const std::string& suite_id) {
  const auto members = EnvSuite::suite_members(suite_id);
  const EnvSpec first = make_env_spec(members.front());
  return {first.state_dim, first.action_dim, members.size()};
}

std::string to_string(BudgetRole role) {
  switch (role) {
    case BudgetRole::Reference: return "reference";
    case BudgetRole::Matched: return "matched";
    case BudgetRole::Exempt: return "exempt";
  }
  throw ConfigError("unknown budget role");
}

AgentSpec make_agent_spec(const TaskShape& shape, BodyKind body, bool task_onehot, const EncoderConfig& encoder,
                          const NetworkConfig& widths) {
  AgentSpec spec;
  spec.num_tasks = shape.num_tasks;
  spec.action_dim = shape.action_dim;
  NetworkSpec net;
  net.state_dim = shape.state_dim;
  net.task_onehot = task_onehot;
  net.encoder = encoder;
  net.body = body;
  net.backbone = widths;
  net.backbone.num_tasks = shape.num_tasks;
  spec.actor = net;
  spec.actor.backbone.output_dim = 2 * shape.action_dim;
  spec.critic = net;
  spec.critic.extra_input = shape.action_dim;
  spec.critic.backbone.output_dim = 1;
  spec.actor.backbone.input_dim = spec.actor.body_input_dim();
  spec.critic.backbone.input_dim = spec.critic.body_input_dim();
  return spec;
}

std::vector<Method> build_methods(const ExperimentConfig& config, const TaskShape& shape) {
  config.validate();
  const EncoderConfig identity{};
  EncoderConfig care = config.encoder;
  care.kind = EncoderKind::CareMixture;
  const NetworkConfig& w = config.network;
  std::vector<Method> out;

  const auto reference = [&](std::string name, BodyKind body, bool onehot, const EncoderConfig& enc,
                             const NetworkConfig& widths) {
    out.push_back(make_method(std::move(name), BudgetRole::Reference, make_agent_spec(shape, body, onehot, enc, widths)));
    return out.back().parameter_count;
  };

  switch (config.preset) {
    case Preset::MtsacBaseline: {
      reference("mtsac", BodyKind::Dense, true, identity, w);
      out.push_back(make_method("shared-blind", BudgetRole::Exempt,
                                make_agent_spec(shape, BodyKind::Dense, false, identity, w)));
      break;
    }
    case Preset::PtslOnly: {
      const auto target = reference("mtsac", BodyKind::Dense, true, identity, w);
      out.push_back(matched("ptsl", shape, BodyKind::Ptsl, false, identity, w, target));
      break;
    }
    case Preset::CarePtsl: {
      const auto target = reference("care", BodyKind::Dense, false, care, w);
      out.push_back(matched("care-ptsl", shape, BodyKind::Ptsl, false, care, w, target));
      break;
    }
    case Preset::CarePtslShallow: {
      const auto target = reference("care", BodyKind::Dense, false, care, w);
      NetworkConfig shallow = w;
      shallow.num_hidden = w.num_hidden - 1;
      out.push_back(matched("care-ptsl-shallow", shape, BodyKind::Ptsl, false, care, shallow, target));
      break;
    }
    case Preset::AblationProjection: {
      NetworkConfig shared = w;
      shared.projection_mode = ProjectionMode::Shared;
      NetworkConfig independent = w;
      independent.projection_mode = ProjectionMode::Independent;
      reference("ptsl-shared", BodyKind::Ptsl, false, identity, shared);
      // Same H and D; the count gap is the per-layer projections.
      out.push_back(make_method("ptsl-independent", BudgetRole::Exempt,
                                make_agent_spec(shape, BodyKind::Ptsl, false, identity, independent)));
      break;
    }
    case Preset::AblationResidual: {
      NetworkConfig base = w;
      base.residual_mode = ResidualMode::None;
      const auto target = reference("residual-none", BodyKind::Ptsl, false, identity, base);
      for (auto mode : {ResidualMode::Addition, ResidualMode::LearnableSum, ResidualMode::LearnableProjection}) {
        NetworkConfig c = w;
        c.residual_mode = mode;
        out.push_back(matched("residual-" + to_string(mode), shape, BodyKind::Ptsl, false, identity, c, target));
      }
      break;
    }
  }
  check_budget(out);
  return out;
}

void check_budget(const std::vector<Method>& methods) {
  const auto ref = std::find_if(methods.begin(), methods.end(),
                                [](const Method& m) { return m.role == BudgetRole::Reference; });
  if (ref == methods.end()) throw ConfigError("preset has no reference method");
  const double target = static_cast<double>(ref->parameter_count);
  for (const auto& m : methods) {
    if (m.role != BudgetRole::Matched) continue;
    const double gap = std::abs(static_cast<double>(m.parameter_count) - target) / target;
    if (gap > kBudgetTolerance) {
      throw ConfigError(m.name + " has " + std::to_string(m.parameter_count) + " parameters against a budget of " +
                        std::to_string(ref->parameter_count));
    }
  }
}

std::string method_hash(const Method& method, const ExperimentConfig& config) {
  const SacConfig& s = config.sac;
  std::string text = "agent=" + to_json(method.agent).dump() + "\n";
  text += "suite=" + config.suite + "\nsteps_per_task=" + std::to_string(config.steps_per_task) +
          "\neval_interval=" + std::to_string(config.eval_interval) +
          "\neval_episodes=" + std::to_string(config.eval_episodes) + "\n";
  text += "sac=" + fmt_real(s.gamma) + "," + fmt_real(s.tau) + "," + fmt_real(s.lr) + "," +
          std::to_string(s.batch_size) + "," + std::to_string(s.warmup_steps_per_task) + "," +
          std::to_string(s.buffer_capacity_per_task) + "," + fmt_real(s.init_alpha) + "," + fmt_real(s.log_std_min) +
          "," + fmt_real(s.log_std_max) + "\n";
  return hex64(fnv1a(text));
}

std::vector<AggregateRow> aggregate(const std::string& method, const std::vector<MetricsLog>& logs) {
  if (logs.empty()) return {};
  std::map<std::pair<int, std::size_t>, std::vector<double>> cells;
  for (const auto& log : logs) {
    for (const auto& r : log.rows) cells[{r.task_id, r.step}].push_back(r.success_rate);
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, values] : cells) {
    if (values.size() != logs.size()) continue;
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double se = 0.0;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    out.push_back({method, key.first, key.second, values.size(), mean, se});
  }
  return out;
}

void RunRecord::save(const fs::path& path) const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["preset"] = preset;
  j["seeds"] = seeds;
  j["complete"] = complete;
  j["error"] = error;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : methods) {
    std::vector<std::string> paths;
    for (const auto& p : m.csv_paths) paths.push_back(p.generic_string());
    j["methods"].push_back(
        {{"name", m.name}, {"hash", m.hash}, {"parameter_count", m.parameter_count}, {"seeds", m.seeds}, {"csv", paths}});
  }
  write_text(path, j.dump(2) + "\n");
}

RunRecord RunRecord::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read run record " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.preset = j.at("preset").get<std::string>();
  r.run_dir = path.parent_path();
  r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  r.complete = j.at("complete").get<bool>();
  r.error = j.value("error", "");
  for (const auto& jm : j.at("methods")) {
    MethodRecord m;
    m.name = jm.at("name").get<std::string>();
    m.hash = jm.at("hash").get<std::string>();
    m.parameter_count = jm.at("parameter_count").get<std::size_t>();
    m.seeds = jm.at("seeds").get<std::vector<std::uint64_t>>();
    std::vector<MetricsLog> logs;
    for (const auto& p : jm.at("csv")) {
      m.csv_paths.emplace_back(p.get<std::string>());
      logs.push_back(MetricsLog::read_csv(m.csv_paths.back()));
    }
    const auto agg = ptsl::aggregate(m.name, logs);
    r.aggregate.insert(r.aggregate.end(), agg.begin(), agg.end());
    r.methods.push_back(std::move(m));
  }
  return r;
}

fs::path run_directory(const ExperimentConfig& config) {
  return config.output_dir / (to_string(config.preset) + "-" + config.hash());
}

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
  const TaskShape shape = TaskShape::of_suite(config.suite);
  const std::vector<Method> methods = build_methods(config, shape);
  std::mutex log_mu;
  const auto say = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    options.log(msg);
  };

  RunRecord record;
  record.config_hash = config.hash();
  record.preset = to_string(config.preset);
  record.run_dir = run_directory(config);
  record.seeds = config.seeds;
  fs::create_directories(record.run_dir);
  write_text(record.run_dir / "config.txt", config.to_text());

  struct Item {
    std::size_t method;
    std::uint64_t seed;
    fs::path dir;
  };
  std::vector<Item> todo;
  std::vector<fs::path> method_dirs;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const Method& m = methods[i];
    const std::string h = method_hash(m, config);
    const fs::path dir = config.output_dir / "methods" / (m.name + "-" + h);
    fs::create_directories(dir);
    nlohmann::json spec;
    spec["name"] = m.name;
    spec["role"] = to_string(m.role);
    spec["parameter_count"] = m.parameter_count;
    spec["agent"] = to_json(m.agent);
    spec["eval_episodes"] = config.eval_episodes;
    write_text(dir / "method.json", spec.dump(2) + "\n");
    method_dirs.push_back(dir);
    record.methods.push_back({m.name, h, m.parameter_count, {}, {}});
    say(m.name + " [" + to_string(m.role) + "] " + std::to_string(m.parameter_count) + " parameters, H=" +
        std::to_string(m.agent.actor.backbone.hidden_dim) + " D=" + std::to_string(m.agent.actor.backbone.task_dim));
    for (auto seed : config.seeds) {
      if (fs::exists(dir / (seed_stem(seed) + ".done")) && fs::exists(dir / (seed_stem(seed) + ".csv"))) {
        say(m.name + " seed " + std::to_string(seed) + ": reusing completed run");
        continue;
      }
      todo.push_back({i, seed, dir});
    }
  }

  std::vector<std::exception_ptr> failures(todo.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const Item& it = todo[k];
      const Method& m = methods[it.method];
      try {
        say(m.name + " seed " + std::to_string(it.seed) + ": training");
        EnvSuite suite = EnvSuite::from_id(config.suite);
        SacAgent agent(m.agent, config.sac, it.seed);
        const auto started = std::chrono::steady_clock::now();
        TrainConfig tc;
        tc.steps_per_task = config.steps_per_task;
        tc.eval_interval = config.eval_interval;
        tc.eval_episodes = config.eval_episodes;
        tc.seed = it.seed;
        const MetricsLog log = train(agent, suite, tc);
        write_text(it.dir / (seed_stem(it.seed) + ".csv"), log.to_csv());
        const std::chrono::duration<double> took = std::chrono::steady_clock::now() - started;
        write_text(it.dir / (seed_stem(it.seed) + ".done"), "seconds = " + fmt_real(took.count()) + "\n");
        const double final_success = log.empty() ? 0.0 : log.rows.back().success_rate;
        say(m.name + " seed " + std::to_string(it.seed) + ": done, final mean success " + fmt_real(final_success));
      } catch (...) {
        failures[k] = std::current_exception();
        say(m.name + " seed " + std::to_string(it.seed) + ": failed");
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(options.jobs, todo.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::exception_ptr first_failure;
  for (const auto& f : failures) {
    if (f && !first_failure) first_failure = f;
  }

  for (std::size_t i = 0; i < methods.size(); ++i) {
    MethodRecord& mr = record.methods[i];
    std::vector<MetricsLog> logs;
    for (auto seed : config.seeds) {
      const fs::path csv = method_dirs[i] / (seed_stem(seed) + ".csv");
      if (!fs::exists(method_dirs[i] / (seed_stem(seed) + ".done")) || !fs::exists(csv)) continue;
      mr.seeds.push_back(seed);
      mr.csv_paths.push_back(csv);
      logs.push_back(MetricsLog::read_csv(csv));
    }
    const auto agg = ptsl::aggregate(mr.name, logs);
    record.aggregate.insert(record.aggregate.end(), agg.begin(), agg.end());
  }
  record.complete = !first_failure;
  if (first_failure) {
    try {
      std::rethrow_exception(first_failure);
    } catch (const std::exception& e) {
      record.error = e.what();
    } catch (...) {
      record.error = "unknown failure";
    }
  }

  write_text(record.run_dir / "aggregate.csv", aggregate_csv(record.aggregate));
  record.save(record.run_dir / "run.json");
  bool any_rows = !record.aggregate.empty();
  if (any_rows) {
    const Report rep = report(record);
    write_text(record.run_dir / "summary.txt", rep.table());
    write_text(record.run_dir / "plot.csv", rep.plot_csv());
  }
  if (first_failure) std::rethrow_exception(first_failure);
  return record;
}

std::optional<std::size_t> step_to_threshold(const std::vector<AggregateRow>& curve, double threshold) {
  std::vector<const AggregateRow*> sorted;
  for (const auto& r : curve) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->step < b->step; });
  for (const auto* r : sorted) {
    if (r->mean >= threshold) return r->step;
  }
  return std::nullopt;
}

Report report(const RunRecord& record, double threshold) {
  Report rep;
  rep.threshold = threshold;
  for (const auto& m : record.methods) {
    std::vector<AggregateRow> curve;
    for (const auto& r : record.aggregate) {
      if (r.method == m.name && r.task_id == -1) curve.push_back(r);
    }
    if (curve.empty()) continue;
    std::sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
    ReportRow row;
    row.method = m.name;
    row.parameter_count = m.parameter_count;
    row.seeds = m.seeds.size();
    row.final_step = curve.back().step;
    row.final_success = curve.back().mean;
    row.final_stderr = curve.back().stderr_;
    row.best_success = curve.front().mean;
    for (const auto& r : curve) row.best_success = std::max(row.best_success, r.mean);
    row.step_to_threshold = step_to_threshold(curve, threshold);
    rep.rows.push_back(row);
    rep.plot.insert(rep.plot.end(), curve.begin(), curve.end());
  }
  if (rep.rows.empty()) throw EmptyReportError("run record has no completed checkpoints");
  return rep;
}

std::string Report::table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %10s %5s %8s %8s %8s %8s %10s\n", "method", "params", "seeds", "step", "final",
                "stderr", "best", "step@thr");
  os << buf;
  for (const auto& r : rows) {
    const std::string thr = r.step_to_threshold ? std::to_string(*r.step_to_threshold) : "-";
    std::snprintf(buf, sizeof buf, "%-24s %10zu %5zu %8zu %8.4f %8.4f %8.4f %10s\n", r.method.c_str(),
                  r.parameter_count, r.seeds, r.final_step, r.final_success, r.final_stderr, r.best_success,
                  thr.c_str());
    os << buf;
  }
  os << "threshold " << threshold << "\n";
  return os.str();
}

std::string Report::plot_csv() const {
  std::string out = "method,step,mean_success,stderr_success\n";
  for (const auto& r : plot) {
    out += r.method + "," + std::to_string(r.step) + "," + fmt_real(r.mean) + "," + fmt_real(r.stderr_) + "\n";
  }
  return out;
}

}  // namespace ptsl
