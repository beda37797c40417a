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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
//
//   acceptance [--out DIR] [--only 1,5,8] [--jobs N]
//
// Experiment outputs land in DIR and completed seeds are reused on the next
// invocation; the runtime criterion therefore sums the training time recorded
// by each seed rather than the wall time of this process.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "oracles.hpp"
#include "ptsl/backbone.hpp"
#include "ptsl/config.hpp"
#include "ptsl/experiment.hpp"

namespace fs = std::filesystem;
using namespace ptsl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ad::Tensor gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = n(rng);
  return ad::Tensor::from_values({rows, cols}, std::move(v));
}

std::vector<double> outputs(const PtslBackbone& net, const ad::Tensor& x, int task) {
  ad::Tape tape(false);
  const ad::Tensor y = task < 0 ? net.forward_shared(tape, x) : net.forward(tape, x, task);
  return {y.values().begin(), y.values().end()};
}

std::vector<NetworkConfig> all_variants(NetworkConfig base) {
  std::vector<NetworkConfig> out;
  for (auto res : {ResidualMode::None, ResidualMode::Addition, ResidualMode::LearnableSum,
                   ResidualMode::LearnableProjection})
    for (auto proj : {ProjectionMode::Shared, ProjectionMode::Independent})
      for (int flags = 0; flags < 4; ++flags) {
        NetworkConfig c = base;
        c.residual_mode = res;
        c.projection_mode = proj;
        c.first_layer_down_projection = flags & 1;
        c.last_layer_up_projection = flags & 2;
        out.push_back(c);
      }
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite_check() {
  const auto t0 = Clock::now();
  std::size_t checks = 0, failed = 0;
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    for (const auto& r : oracle::gradient_suite(seed)) {
      ++checks;
      if (!r.pass) {
        ++failed;
        std::cerr << "  gradient " << oracle::format_check(r) << " (seed " << seed << ")\n";
      }
      if (r.value > worst) {
        worst = r.value;
        worst_name = r.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failed == 0 && secs < 120.0;
  o.detail = std::to_string(checks) + " checks over 5 seeds, " + std::to_string(failed) + " failed, worst rel err " +
             fmt("%.2e", worst) + " (" + worst_name + ") < 1e-4, runtime " + fmt("%.1f", secs) + " s < 120 s";
  return o;
}

Outcome zero_init_check() {
  NetworkConfig base;
  base.input_dim = 6;
  base.output_dim = 3;
  base.hidden_dim = 16;
  base.task_dim = 4;
  base.num_tasks = 4;
  base.num_hidden = 3;
  double worst = 0.0;
  std::size_t compared = 0;
  std::uint64_t seed = 100;
  for (const auto& c : all_variants(base)) {
    const PtslBackbone net(c, seed++);
    const ad::Tensor x = gaussian(100, c.input_dim, seed++);
    const auto shared = outputs(net, x, -1);
    for (int j = 0; j < static_cast<int>(c.num_tasks); ++j) {
      const auto y = outputs(net, x, j);
      for (std::size_t k = 0; k < y.size(); ++k) worst = std::max(worst, std::abs(y[k] - shared[k]));
      compared += y.size();
    }
  }
  Outcome o;
  o.pass = worst == 0.0;
  o.detail = "32 configs x 100 inputs x 4 tasks (" + std::to_string(compared) +
             " outputs), max abs diff " + fmt("%.3g", worst) + " == 0";
  return o;
}

Outcome count_formula_check() {
  std::mt19937_64 rng(31337);
  const auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::size_t mismatches = 0;
  std::set<int> combos;
  for (int k = 0; k < 50; ++k) {
    NetworkConfig c;
    c.input_dim = pick(1, 40);
    c.output_dim = pick(1, 12);
    c.hidden_dim = pick(2, 48);
    c.task_dim = pick(1, c.hidden_dim);
    c.num_tasks = pick(1, 8);
    c.num_hidden = pick(1, 4);
    c.first_layer_down_projection = k & 1;
    c.last_layer_up_projection = k & 2;
    c.projection_mode = (k / 4) % 2 ? ProjectionMode::Independent : ProjectionMode::Shared;
    c.residual_mode = static_cast<ResidualMode>(pick(0, 3));
    combos.insert(k & 3);
    const std::size_t formula = count_parameters(c).total();
    const std::size_t shapes = oracle::enumerate_parameters(c);
    if (formula != shapes) {
      ++mismatches;
      std::cerr << "  count mismatch config " << k << ": " << formula << " vs " << shapes << "\n";
    }
  }

  NetworkConfig c;
  c.input_dim = 104;
  c.output_dim = 8;
  c.hidden_dim = 326;
  c.task_dim = 50;
  c.num_tasks = 10;
  c.num_hidden = 3;
  const std::size_t down_first = count_parameters(c).first_task_layer;
  c.first_layer_down_projection = false;
  const std::size_t direct_first = count_parameters(c).first_task_layer;
  const std::size_t direct_last = count_parameters(c).last_task_layer;
  c.last_layer_up_projection = true;
  const std::size_t up_last = count_parameters(c).last_task_layer;
  // Direct evaluation of the boundary-layer expressions.
  const std::size_t I = 104, O = 8, D = 50, T = 10;
  const bool formulas = down_first == T * (D * D + D) + I * D && direct_first == T * (I * D + D) &&
                        direct_last == T * (D * O + O) && up_last == T * (D * D + D) + D * O;
  const bool worked = down_first == 30700 && direct_first == 52500 && direct_last == 4080 && up_last == 25900;

  Outcome o;
  o.pass = mismatches == 0 && combos.size() == 4 && formulas && worked;
  o.detail = "50 random configs, " + std::to_string(mismatches) + " mismatches vs shape enumeration, " +
             std::to_string(combos.size()) + "/4 boundary combos; worked values " + std::to_string(down_first) + " " +
             std::to_string(direct_first) + " " + std::to_string(direct_last) + " " + std::to_string(up_last) +
             (worked ? " == 30700 52500 4080 25900" : " != 30700 52500 4080 25900");
  return o;
}

Outcome isolation_check() {
  std::size_t violations = 0, unchanged = 0, trials = 0;
  for (int p = 0; p < 10; ++p) {
    NetworkConfig c;
    c.input_dim = 5;
    c.output_dim = 3;
    c.hidden_dim = 12;
    c.task_dim = 3;
    c.num_tasks = 4;
    c.num_hidden = 2 + p % 2;
    c.residual_mode = static_cast<ResidualMode>(p % 4);
    c.projection_mode = p % 3 ? ProjectionMode::Shared : ProjectionMode::Independent;
    c.first_layer_down_projection = (p / 2) % 2;
    c.last_layer_up_projection = (p / 3) % 2;
    for (int j = 0; j < 4; ++j) {
      const PtslBackbone net(c, 500 + p);
      oracle::randomize(net.parameters(), 600 + p);
      const ad::Tensor x = gaussian(16, c.input_dim, 700 + p);
      std::vector<std::vector<double>> before;
      for (int k = 0; k < 4; ++k) before.push_back(outputs(net, x, k));
      oracle::randomize(net.task_parameters(j), 800 + 10 * p + j, 1.0);
      for (int k = 0; k < 4; ++k) {
        const auto after = outputs(net, x, k);
        if (k == j && after == before[k]) ++unchanged;
        if (k != j && after != before[k]) ++violations;
      }
      ++trials;
    }
  }
  Outcome o;
  o.pass = violations == 0 && unchanged == 0;
  o.detail = std::to_string(trials) + " perturbations (10 configs x 4 tasks), " + std::to_string(violations) +
             " other-task outputs changed, " + std::to_string(unchanged) + " perturbed tasks unaffected";
  return o;
}

// ---------------------------------------------------------------------------

struct MethodSeeds {
  std::vector<MetricsLog> logs;
  double train_seconds = 0.0;
};

MethodSeeds load_method(const MethodRecord& m) {
  MethodSeeds out;
  for (const auto& csv : m.csv_paths) {
    out.logs.push_back(MetricsLog::read_csv(csv));
    std::ifstream done(fs::path(csv).replace_extension(".done"));
    std::string key, eq;
    double s = 0.0;
    if (done >> key >> eq >> s) out.train_seconds += s;
  }
  return out;
}

const MethodRecord& find_method(const RunRecord& r, const std::string& name) {
  for (const auto& m : r.methods)
    if (m.name == name) return m;
  throw std::runtime_error("run has no method " + name);
}

const AggregateRow& final_row(const RunRecord& r, const std::string& method, int task) {
  const AggregateRow* best = nullptr;
  for (const auto& a : r.aggregate)
    if (a.method == method && a.task_id == task && (!best || a.step > best->step)) best = &a;
  if (!best) throw std::runtime_error("no checkpoints for " + method);
  return *best;
}

RunOptions progress(std::size_t jobs) {
  RunOptions opt;
  opt.jobs = jobs;
  const auto t0 = Clock::now();
  opt.log = [t0](const std::string& s) { std::cerr << "  [" << fmt("%7.1f", seconds_since(t0)) << " s] " << s << "\n"; };
  return opt;
}

Outcome interference_check(const fs::path& out, std::size_t jobs) {
  ExperimentConfig base;
  base.suite = "mt4-toy";
  base.seeds = {1, 2, 3, 4};
  base.steps_per_task = 50000;
  base.output_dir = out / "interference";

  ExperimentConfig blind = base;
  blind.preset = Preset::MtsacBaseline;
  ExperimentConfig matched = base;
  matched.preset = Preset::PtslOnly;

  const RunRecord rb = run(blind, progress(jobs));
  const RunRecord rm = run(matched, progress(jobs));

  // Conflict pair: tasks 1 and 2 of the suite.
  const auto members = EnvSuite::suite_members(base.suite);
  std::vector<int> pair;
  for (int t = 0; t < static_cast<int>(members.size()); ++t)
    if (members[t].starts_with("conflict-reach")) pair.push_back(t);
  double blind_pair = 0.0;
  for (int t : pair) blind_pair += final_row(rb, "shared-blind", t).mean;
  blind_pair /= static_cast<double>(pair.size());

  const AggregateRow& a = final_row(rm, "ptsl", -1);
  const AggregateRow& b = final_row(rm, "mtsac", -1);
  const double pooled = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
  const double gap = a.mean - b.mean;

  double seconds = 0.0;
  for (const auto* name : {"mtsac", "shared-blind"}) seconds += load_method(find_method(rb, name)).train_seconds;
  seconds += load_method(find_method(rm, "ptsl")).train_seconds;

  const bool ok_a = blind_pair <= 0.55;
  const bool ok_b = gap > pooled;
  const bool ok_t = seconds <= 3600.0;
  Outcome o;
  o.pass = ok_a && ok_b && ok_t && a.n == 4 && b.n == 4;
  o.detail = "(a) shared-blind conflict-pair success " + fmt("%.3f", blind_pair) + (ok_a ? " <= " : " > ") +
             "0.55; (b) ptsl " + fmt("%.3f", a.mean) + " +- " + fmt("%.3f", a.stderr_) + " vs mtsac " +
             fmt("%.3f", b.mean) + " +- " + fmt("%.3f", b.stderr_) + ", gap " + fmt("%.3f", gap) +
             (ok_b ? " > " : " <= ") + "pooled SE " + fmt("%.3f", pooled) + "; training time " +
             fmt("%.0f", seconds) + " s" + (ok_t ? " <= " : " > ") + "3600 s; " + std::to_string(a.n) + " seeds";
  for (const auto& row : report(rm).rows)
    std::cerr << "  " << row.method << " (" << row.parameter_count << " params) final " << fmt("%.3f", row.final_success)
              << " best " << fmt("%.3f", row.best_success) << "\n";
  for (const auto& m : {&rb, &rm})
    for (const auto& r : m->aggregate)
      if (r.step == base.steps_per_task && r.task_id >= 0)
        std::cerr << "  " << r.method << " task " << members[r.task_id] << " final " << fmt("%.3f", r.mean) << "\n";
  return o;
}

Outcome projection_ablation_check() {
  ExperimentConfig c;
  c.preset = Preset::AblationProjection;
  c.network.hidden_dim = 326;
  c.network.task_dim = 50;
  c.network.num_hidden = 3;
  // State width 104 and 4-D actions give the actor an I=104, O=8 backbone.
  const auto methods = build_methods(c, TaskShape{104, 4, 10});
  const Method* shared = nullptr;
  const Method* indep = nullptr;
  for (const auto& m : methods) {
    if (m.agent.actor.backbone.projection_mode == ProjectionMode::Shared) shared = &m;
    if (m.agent.actor.backbone.projection_mode == ProjectionMode::Independent) indep = &m;
  }
  if (!shared || !indep) return {false, "preset did not build both projection variants"};
  const auto& sb = shared->agent.actor.backbone;
  const double ns = static_cast<double>(count_parameters(sb).total());
  const double ni = static_cast<double>(count_parameters(indep->agent.actor.backbone).total());
  const double excess = ni / ns - 1.0;
  const double agent_excess =
      static_cast<double>(indep->parameter_count) / static_cast<double>(shared->parameter_count) - 1.0;
  Outcome o;
  o.pass = std::abs(excess - 0.12) <= 0.02 && sb.input_dim == 104 && sb.output_dim == 8 && sb.hidden_dim == 326 &&
           sb.task_dim == 50 && sb.num_hidden == 3 && sb.num_tasks == 10;
  o.detail = "I=104 O=8 H=326 D=50 N=3 T=10 backbone: shared " + fmt("%.0f", ns) + ", independent " +
             fmt("%.0f", ni) + ", excess " + fmt("%.2f", 100.0 * excess) + "% vs 12 +- 2% (whole agent " +
             fmt("%.2f", 100.0 * agent_excess) + "%)";
  return o;
}

Outcome determinism_check(const fs::path& out, std::size_t jobs) {
  const fs::path root = out / "determinism";
  fs::remove_all(root);
  std::size_t compared = 0, differing = 0;
  for (Preset p : all_presets()) {
    std::vector<RunRecord> records;
    for (const char* side : {"a", "b"}) {
      ExperimentConfig c;
      c.preset = p;
      c.suite = "mt4-toy";
      c.seeds = {1, 2};
      c.steps_per_task = 1200;
      c.eval_interval = 400;
      c.eval_episodes = 2;
      c.sac.warmup_steps_per_task = 400;
      c.output_dir = root / side;
      RunOptions opt;
      opt.jobs = jobs;
      records.push_back(run(c, opt));
    }
    for (std::size_t m = 0; m < records[0].methods.size(); ++m) {
      for (std::size_t s = 0; s < records[0].methods[m].csv_paths.size(); ++s) {
        ++compared;
        if (slurp(records[0].methods[m].csv_paths[s]) != slurp(records[1].methods[m].csv_paths[s])) ++differing;
      }
    }
    ++compared;
    if (slurp(records[0].run_dir / "aggregate.csv") != slurp(records[1].run_dir / "aggregate.csv")) ++differing;
  }
  Outcome o;
  o.pass = differing == 0 && compared > 0;
  o.detail = "6 presets re-run with seeds {1,2}: " + std::to_string(compared) + " CSVs compared, " +
             std::to_string(differing) + " differ";
  return o;
}

Outcome single_task_check(const fs::path& out, std::size_t jobs) {
  ExperimentConfig c;
  c.preset = Preset::PtslOnly;
  c.suite = "reach";
  c.seeds = {1, 2, 3, 4};
  c.steps_per_task = 30000;
  c.output_dir = out / "single-task";
  const RunRecord r = run(c, progress(jobs));
  std::string detail;
  std::size_t good_total = 0;
  for (const auto* name : {"ptsl", "mtsac"}) {
    const MethodSeeds ms = load_method(find_method(r, name));
    std::size_t good = 0;
    std::string per_seed;
    for (const auto& log : ms.logs) {
      double best = 0.0;
      std::size_t at = 0;
      for (const auto& row : log.rows) {
        if (row.task_id == -1 && row.step <= 30000 && row.success_rate > best) {
          best = row.success_rate;
          at = row.step;
        }
      }
      good += best >= 0.9;
      per_seed += (per_seed.empty() ? "" : " ") + fmt("%.1f", best) + "@" + std::to_string(at);
    }
    if (std::string(name) == "ptsl") good_total = good;
    detail += std::string(detail.empty() ? "" : "; ") + name + " " + std::to_string(good) + "/4 seeds >= 0.9 [" +
              per_seed + "]";
  }
  return {good_total >= 3, detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = "acceptance-runs";
  std::set<int> only;
  std::size_t jobs = 1;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      const auto value = [&]() -> std::string {
        if (i + 1 >= argc) throw std::invalid_argument(a + " needs a value");
        return argv[++i];
      };
      if (a == "--out") {
        out = value();
      } else if (a == "--jobs") {
        jobs = std::stoul(value());
      } else if (a == "--only") {
        std::stringstream ss(value());
        std::string tok;
        while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
      } else if (a == "-h" || a == "--help") {
        std::cout << "usage: acceptance [--out DIR] [--only 1,5,8] [--jobs N]\n";
        return 0;
      } else {
        throw std::invalid_argument("unknown argument " + a);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  fs::create_directories(out);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite_check},
      {"zero-init equivalence", zero_init_check},
      {"count-formula fidelity", count_formula_check},
      {"task isolation", isolation_check},
      {"interference experiment", [&] { return interference_check(out, jobs); }},
      {"projection ablation parity", projection_ablation_check},
      {"determinism", [&] { return determinism_check(out, jobs); }},
      {"single-task sanity", [&] { return single_task_check(out, jobs); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
