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

// Command line front end: run, report, count-params, gradcheck, oracle.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "checks.hpp"
#include "ptsl/config.hpp"
#include "ptsl/errors.hpp"
#include "ptsl/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string seeds;
  std::string out;
  std::size_t steps = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value experiment config");
  cmd->add_option("--preset", f.preset, "preset name");
  cmd->add_option("--seeds", f.seeds, "comma separated seeds");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--steps", f.steps, "environment steps per task");
}

ptsl::ExperimentConfig resolve(const CommonFlags& f) {
  ptsl::ExperimentConfig c = f.config.empty() ? ptsl::ExperimentConfig{} : ptsl::ExperimentConfig::load(f.config);
  if (!f.preset.empty()) c.preset = ptsl::parse_preset(f.preset);
  if (!f.seeds.empty()) c.seeds = ptsl::parse_seed_list(f.seeds);
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.steps > 0) c.steps_per_task = f.steps;
  c.validate();
  return c;
}

int print_checks(const std::vector<ptsl::oracle::CheckResult>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << ptsl::oracle::format_check(c) << "\n";
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected task-specific layers for multi-task SAC"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::size_t jobs = 1;
  auto* run_cmd = app.add_subcommand("run", "train every method and seed of a preset");
  add_common(run_cmd, run_flags);
  run_cmd->add_option("--jobs", jobs, "concurrent seed workers")->check(CLI::PositiveNumber);

  std::string run_dir;
  double threshold = 0.5;
  std::string plot_path;
  auto* report_cmd = app.add_subcommand("report", "summarize a run directory");
  report_cmd->add_option("--run", run_dir, "run directory holding run.json")->required();
  report_cmd->add_option("--threshold", threshold, "success threshold for step-to-threshold");
  report_cmd->add_option("--plot", plot_path, "write plot data CSV here");

  CommonFlags count_flags;
  std::optional<std::size_t> in_dim;
  ptsl::NetworkConfig net;
  std::string projection = "shared", residual = "none";
  bool no_first_down = false, last_up = false;
  auto* count_cmd = app.add_subcommand("count-params", "parameter counts for a preset or one backbone");
  add_common(count_cmd, count_flags);
  count_cmd->add_option("--input", in_dim, "backbone input width (switches to single-backbone mode)");
  count_cmd->add_option("--output", net.output_dim, "backbone output width");
  count_cmd->add_option("--hidden", net.hidden_dim, "hidden width H");
  count_cmd->add_option("--task-dim", net.task_dim, "task-specific width D");
  count_cmd->add_option("--layers", net.num_hidden, "hidden layers N");
  count_cmd->add_option("--tasks", net.num_tasks, "number of tasks T");
  count_cmd->add_option("--projection", projection, "shared or independent");
  count_cmd->add_option("--residual", residual, "none, addition, learnable-sum, learnable-projection");
  count_cmd->add_flag("--no-first-down", no_first_down, "feed the raw input to the first task layers");
  count_cmd->add_flag("--last-up", last_up, "up-project the last task layer");

  std::uint64_t check_seed = 7;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad_cmd->add_option("--seed", check_seed, "seed for random parameters and inputs");

  std::string oracle_out;
  std::uint64_t oracle_seed = 11;
  auto* oracle_cmd = app.add_subcommand("oracle", "run the derived-value oracles and record their outputs");
  oracle_cmd->add_option("--out", oracle_out, "write oracles.json into this directory");
  oracle_cmd->add_option("--seed", oracle_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      const ptsl::ExperimentConfig config = resolve(run_flags);
      ptsl::RunOptions options;
      options.jobs = jobs;
      options.log = [](const std::string& msg) { std::cerr << msg << std::endl; };
      const ptsl::RunRecord record = ptsl::run(config, options);
      std::cout << ptsl::report(record).table();
      std::cout << "run directory: " << record.run_dir.string() << "\n";
      return kExitOk;
    }
    if (*report_cmd) {
      const ptsl::RunRecord record = ptsl::RunRecord::load(fs::path(run_dir) / "run.json");
      const ptsl::Report rep = ptsl::report(record, threshold);
      std::cout << rep.table();
      if (!record.complete) std::cout << "incomplete run: " << record.error << "\n";
      if (!plot_path.empty()) {
        std::ofstream os(plot_path);
        os << rep.plot_csv();
      }
      return kExitOk;
    }
    if (*count_cmd) {
      if (in_dim) {
        net.input_dim = *in_dim;
        net.projection_mode = ptsl::parse_projection_mode(projection);
        net.residual_mode = ptsl::parse_residual_mode(residual);
        net.first_layer_down_projection = !no_first_down;
        net.last_layer_up_projection = last_up;
        net.validate();
        const auto b = ptsl::count_parameters(net);
        std::printf("shared %zu\ntask %zu\nprojections %zu\nresidual %zu\nfirst_task_layer %zu\nlast_task_layer %zu\n"
                    "total %zu\n",
                    b.shared, b.task, b.projections, b.residual, b.first_task_layer, b.last_task_layer, b.total());
        return kExitOk;
      }
      const ptsl::ExperimentConfig config = resolve(count_flags);
      const auto methods = ptsl::build_methods(config, ptsl::TaskShape::of_suite(config.suite));
      std::printf("%-24s %-10s %6s %6s %12s %12s\n", "method", "role", "H", "D", "actor", "agent");
      for (const auto& m : methods) {
        std::printf("%-24s %-10s %6zu %6zu %12zu %12zu\n", m.name.c_str(), ptsl::to_string(m.role).c_str(),
                    m.agent.actor.backbone.hidden_dim, m.agent.actor.backbone.task_dim, m.agent.actor.count(),
                    m.parameter_count);
      }
      return kExitOk;
    }
    if (*grad_cmd) return print_checks(ptsl::oracle::gradient_suite(check_seed));
    if (*oracle_cmd) {
      const auto checks = ptsl::oracle::derived_suite(oracle_seed);
      if (!oracle_out.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& c : checks) {
          j.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass},
                       {"detail", c.detail}});
        }
        fs::create_directories(oracle_out);
        std::ofstream os(fs::path(oracle_out) / "oracles.json");
        os << j.dump(2) << "\n";
      }
      return print_checks(checks);
    }
  } catch (const ptsl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ptsl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
