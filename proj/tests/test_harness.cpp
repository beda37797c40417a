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
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ptsl/config.hpp"
#include "ptsl/errors.hpp"
#include "ptsl/experiment.hpp"

namespace ptsl {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ptsl-harness-" + name);
  fs::remove_all(dir);
  return dir;
}

// Small enough that a seed trains in well under a second.
ExperimentConfig tiny(Preset preset, const fs::path& out) {
  ExperimentConfig c;
  c.preset = preset;
  c.suite = "conflict-pair";
  c.seeds = {1, 2, 3};
  c.steps_per_task = 300;
  c.eval_interval = 100;
  c.eval_episodes = 3;
  c.output_dir = out;
  // Smallest widths at which every preset can meet the budget tolerance.
  c.network.hidden_dim = 14;
  c.network.task_dim = 3;
  c.sac.batch_size = 16;
  c.sac.warmup_steps_per_task = 100;
  c.sac.buffer_capacity_per_task = 1000;
  return c;
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c;
  c.preset = Preset::AblationResidual;
  c.seeds = {7, 3};
  c.network.residual_mode = ResidualMode::LearnableProjection;
  c.network.projection_mode = ProjectionMode::Independent;
  c.network.last_layer_up_projection = true;
  c.sac.tau = 0.125;
  c.sac.lr = 1.0 / 3.0;
  c.output_dir = "some/where";
  const ExperimentConfig back = ExperimentConfig::parse(c.to_text());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(c.to_text().rfind("schema_version = 1\n", 0), 0u);
}

TEST(Config, CommentsAndBlankLines) {
  const ExperimentConfig c = ExperimentConfig::parse(
      "# header\nschema_version = 1\n\n  preset = care-ptsl   # trailing\nseeds = 5,6\nsac.batch_size=32\n");
  EXPECT_EQ(c.preset, Preset::CarePtsl);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{5, 6}));
  EXPECT_EQ(c.sac.batch_size, 32u);
  EXPECT_EQ(c.steps_per_task, 50000u);
  EXPECT_EQ(c.eval_episodes, 10u);
}

TEST(Config, RejectsMalformedInput) {
  const std::string v = "schema_version = 1\n";
  EXPECT_THROW(ExperimentConfig::parse("preset = ptsl-only\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("schema_version = 2\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "network.widht = 3\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "seeds = 1\nseeds = 2\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "steps_per_task = lots\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "steps_per_task = -5\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "sac.gamma = 0.9x\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "preset = ptsl-everything\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "network.residual_mode = sideways\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "suite = mt50\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "just words\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse(v + "network.task_dim = 100\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/ptsl.cfg"), std::exception);
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("1,2, 3"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_THROW(parse_seed_list(""), ConfigError);
  EXPECT_THROW(parse_seed_list("1,1"), ConfigError);
  EXPECT_THROW(parse_seed_list("1,x"), ConfigError);
}

TEST(Config, SaveLoad) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  ExperimentConfig c = tiny(Preset::CarePtsl, dir);
  c.save(dir / "exp.cfg");
  EXPECT_EQ(ExperimentConfig::load(dir / "exp.cfg"), c);
  fs::remove_all(dir);
}

TEST(Config, PresetNames) {
  for (Preset p : all_presets()) EXPECT_EQ(parse_preset(to_string(p)), p);
  EXPECT_EQ(all_presets().size(), 6u);
  EXPECT_THROW(parse_preset("baseline"), ConfigError);
}

TEST(ConfigHash, StableAndSensitive) {
  const ExperimentConfig base;
  EXPECT_EQ(base.hash().size(), 16u);
  EXPECT_EQ(base.hash(), ExperimentConfig::parse(base.to_text()).hash());
  EXPECT_EQ(base.hash(), hex64(fnv1a(base.to_text())));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);

  const std::vector<std::function<void(ExperimentConfig&)>> edits{
      [](ExperimentConfig& c) { c.preset = Preset::CarePtsl; },
      [](ExperimentConfig& c) { c.suite = "mt8-toy"; },
      [](ExperimentConfig& c) { c.seeds = {1, 2, 3}; },
      [](ExperimentConfig& c) { c.steps_per_task = 49999; },
      [](ExperimentConfig& c) { c.eval_interval = 1000; },
      [](ExperimentConfig& c) { c.eval_episodes = 11; },
      [](ExperimentConfig& c) { c.output_dir = "elsewhere"; },
      [](ExperimentConfig& c) { c.network.hidden_dim = 49; },
      [](ExperimentConfig& c) { c.network.task_dim = 7; },
      [](ExperimentConfig& c) { c.network.num_hidden = 3; },
      [](ExperimentConfig& c) { c.network.projection_mode = ProjectionMode::Independent; },
      [](ExperimentConfig& c) { c.network.residual_mode = ResidualMode::Addition; },
      [](ExperimentConfig& c) { c.network.first_layer_down_projection = false; },
      [](ExperimentConfig& c) { c.network.last_layer_up_projection = true; },
      [](ExperimentConfig& c) { c.encoder.num_experts = 5; },
      [](ExperimentConfig& c) { c.encoder.expert_hidden += 1; },
      [](ExperimentConfig& c) { c.encoder.context_dim += 1; },
      [](ExperimentConfig& c) { c.encoder.attention_hidden += 1; },
      [](ExperimentConfig& c) { c.encoder.output_dim += 1; },
      [](ExperimentConfig& c) { c.sac.gamma = 0.98; },
      [](ExperimentConfig& c) { c.sac.tau = 0.01; },
      [](ExperimentConfig& c) { c.sac.lr = 1e-3; },
      [](ExperimentConfig& c) { c.sac.batch_size = 128; },
      [](ExperimentConfig& c) { c.sac.warmup_steps_per_task = 10; },
      [](ExperimentConfig& c) { c.sac.buffer_capacity_per_task = 10; },
      [](ExperimentConfig& c) { c.sac.init_alpha = 0.5; },
      [](ExperimentConfig& c) { c.sac.log_std_min = -5; },
      [](ExperimentConfig& c) { c.sac.log_std_max = 1; },
  };
  for (std::size_t i = 0; i < edits.size(); ++i) {
    ExperimentConfig c;
    edits[i](c);
    EXPECT_NE(c.hash(), base.hash()) << "edit " << i;
  }
}

TEST(Presets, MethodsMeetTheBudget) {
  for (const std::string suite : {"mt4-toy", "mt8-toy"}) {
    for (Preset p : all_presets()) {
      ExperimentConfig c;
      c.preset = p;
      c.suite = suite;
      const auto methods = build_methods(c, TaskShape::of_suite(suite));
      ASSERT_GE(methods.size(), 2u) << to_string(p);
      EXPECT_EQ(methods.front().role, BudgetRole::Reference);
      const double ref = static_cast<double>(methods.front().parameter_count);
      for (const auto& m : methods) {
        EXPECT_EQ(m.parameter_count, count_agent_parameters(m.agent)) << m.name;
        if (m.role == BudgetRole::Matched) {
          EXPECT_LE(std::abs(m.parameter_count - ref) / ref, kBudgetTolerance) << to_string(p) << " " << m.name;
        }
      }
      EXPECT_NO_THROW(check_budget(methods));
    }
  }
}

TEST(Presets, MethodLineups) {
  const TaskShape shape = TaskShape::of_suite("mt4-toy");
  const auto names = [&](Preset p) {
    ExperimentConfig c;
    c.preset = p;
    std::vector<std::string> out;
    for (const auto& m : build_methods(c, shape)) out.push_back(m.name);
    return out;
  };
  EXPECT_EQ(names(Preset::MtsacBaseline), (std::vector<std::string>{"mtsac", "shared-blind"}));
  EXPECT_EQ(names(Preset::PtslOnly), (std::vector<std::string>{"mtsac", "ptsl"}));
  EXPECT_EQ(names(Preset::CarePtsl), (std::vector<std::string>{"care", "care-ptsl"}));
  EXPECT_EQ(names(Preset::AblationResidual),
            (std::vector<std::string>{"residual-none", "residual-addition", "residual-learnable-sum",
                                      "residual-learnable-projection"}));

  ExperimentConfig c;
  c.preset = Preset::MtsacBaseline;
  const auto base = build_methods(c, shape);
  EXPECT_TRUE(base[0].agent.actor.task_onehot);
  EXPECT_FALSE(base[1].agent.actor.task_onehot);
  EXPECT_EQ(base[1].role, BudgetRole::Exempt);
  EXPECT_EQ(base[0].agent.actor.body, BodyKind::Dense);

  c.preset = Preset::CarePtslShallow;
  const auto shallow = build_methods(c, shape);
  EXPECT_EQ(shallow[1].agent.actor.backbone.num_hidden, c.network.num_hidden - 1);
  EXPECT_EQ(shallow[1].agent.actor.encoder.kind, EncoderKind::CareMixture);
  EXPECT_EQ(shallow[0].agent.actor.encoder.kind, EncoderKind::CareMixture);
}

TEST(Presets, ProjectionAblationSharesWidths) {
  ExperimentConfig c;
  c.preset = Preset::AblationProjection;
  const TaskShape shape = TaskShape::of_suite("mt4-toy");
  const auto m = build_methods(c, shape);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[1].role, BudgetRole::Exempt);
  EXPECT_EQ(m[0].agent.actor.backbone.hidden_dim, m[1].agent.actor.backbone.hidden_dim);
  EXPECT_EQ(m[0].agent.actor.backbone.task_dim, m[1].agent.actor.backbone.task_dim);
  EXPECT_EQ(m[1].agent.actor.backbone.projection_mode, ProjectionMode::Independent);
  // Independent projections add one down (and up) projection per extra layer.
  EXPECT_GT(m[1].parameter_count, m[0].parameter_count);
  NetworkConfig shared = m[0].agent.actor.backbone, indep = m[1].agent.actor.backbone;
  const auto ps = count_parameters(shared), pi = count_parameters(indep);
  EXPECT_EQ(ps.shared, pi.shared);
  EXPECT_EQ(ps.task, pi.task);
  EXPECT_LT(ps.projections, pi.projections);
}

TEST(Presets, BudgetViolationIsAConfigError) {
  ExperimentConfig c;
  auto methods = build_methods(c, TaskShape::of_suite("mt4-toy"));
  methods[1].parameter_count = methods[0].parameter_count * 102 / 100;
  EXPECT_THROW(check_budget(methods), ConfigError);
  methods.erase(methods.begin());
  EXPECT_THROW(check_budget(methods), ConfigError);
}

TEST(MethodHash, IgnoresPresetAndSeeds) {
  ExperimentConfig a, b;
  a.preset = Preset::MtsacBaseline;
  b.preset = Preset::PtslOnly;
  b.seeds = {9};
  const TaskShape shape = TaskShape::of_suite(a.suite);
  const auto ma = build_methods(a, shape), mb = build_methods(b, shape);
  EXPECT_EQ(method_hash(ma[0], a), method_hash(mb[0], b));
  EXPECT_NE(method_hash(ma[0], a), method_hash(ma[1], a));
  b.steps_per_task = 10;
  EXPECT_NE(method_hash(ma[0], a), method_hash(mb[0], b));
}

TEST(Aggregate, SampleStandardError) {
  std::vector<MetricsLog> logs(3);
  const double vals[3] = {0.2, 0.5, 0.9};
  for (int s = 0; s < 3; ++s) logs[s].rows.push_back({100, -1, vals[s], 0.0, 0.0, 1.0});
  const auto rows = aggregate("m", logs);
  ASSERT_EQ(rows.size(), 1u);
  const double mean = (0.2 + 0.5 + 0.9) / 3.0;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(rows[0].mean, mean, 1e-15);
  EXPECT_NEAR(rows[0].stderr_, std::sqrt(ss / 2.0) / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(rows[0].n, 3u);
  EXPECT_EQ(aggregate("m", {logs[0]})[0].stderr_, 0.0);
}

class TinyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    out_ = new fs::path(scratch("run"));
    record_ = new RunRecord(run(tiny(Preset::MtsacBaseline, *out_)));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*out_);
    delete record_;
    delete out_;
  }
  static fs::path* out_;
  static RunRecord* record_;
};
fs::path* TinyRun::out_ = nullptr;
RunRecord* TinyRun::record_ = nullptr;

TEST_F(TinyRun, WritesTheRunLayout) {
  const RunRecord& r = *record_;
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.run_dir, *out_ / ("mtsac-baseline-" + r.config_hash));
  for (const char* f : {"config.txt", "aggregate.csv", "run.json", "summary.txt", "plot.csv"})
    EXPECT_TRUE(fs::exists(r.run_dir / f)) << f;
  ASSERT_EQ(r.methods.size(), 2u);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
    for (const auto& p : m.csv_paths) EXPECT_TRUE(fs::exists(p));
    EXPECT_TRUE(fs::exists(*out_ / "methods" / (m.name + "-" + m.hash) / "method.json"));
  }
  EXPECT_EQ(ExperimentConfig::load(r.run_dir / "config.txt"), tiny(Preset::MtsacBaseline, *out_));
  EXPECT_EQ(slurp(r.run_dir / "aggregate.csv").substr(0, 49), "method,task_id,step,n,mean_success,stderr_success");
}

TEST_F(TinyRun, AggregateMatchesIndependentRecount) {
  for (const auto& m : record_->methods) {
    const auto cells = oracle::recompute_aggregate(m.csv_paths);
    std::size_t seen = 0;
    for (const auto& row : record_->aggregate) {
      if (row.method != m.name) continue;
      const auto it = cells.find({row.task_id, row.step});
      ASSERT_NE(it, cells.end());
      EXPECT_EQ(row.n, it->second.n);
      EXPECT_NEAR(row.mean, it->second.mean, 1e-12);
      EXPECT_NEAR(row.stderr_, it->second.stderr_, 1e-12);
      ++seen;
    }
    EXPECT_EQ(seen, cells.size());
    EXPECT_EQ(seen, 3u * 3u);  // 3 evaluations x (2 tasks + mean)
  }
}

TEST_F(TinyRun, RecordRoundTrips) {
  const RunRecord back = RunRecord::load(record_->run_dir / "run.json");
  EXPECT_EQ(back.config_hash, record_->config_hash);
  EXPECT_EQ(back.preset, "mtsac-baseline");
  EXPECT_EQ(back.seeds, record_->seeds);
  EXPECT_TRUE(back.complete);
  ASSERT_EQ(back.aggregate.size(), record_->aggregate.size());
  for (std::size_t i = 0; i < back.aggregate.size(); ++i) {
    EXPECT_EQ(back.aggregate[i].method, record_->aggregate[i].method);
    EXPECT_EQ(back.aggregate[i].mean, record_->aggregate[i].mean);
  }
}

TEST_F(TinyRun, ResumeReusesCompletedSeeds) {
  std::vector<std::string> lines;
  RunOptions opt;
  opt.log = [&](const std::string& s) { lines.push_back(s); };
  const auto before = slurp(record_->run_dir / "aggregate.csv");
  const RunRecord again = run(tiny(Preset::MtsacBaseline, *out_), opt);
  std::size_t reused = 0, trained = 0;
  for (const auto& l : lines) {
    reused += l.find("reusing") != std::string::npos;
    trained += l.find(": training") != std::string::npos;
  }
  EXPECT_EQ(reused, 6u);
  EXPECT_EQ(trained, 0u);
  EXPECT_EQ(slurp(again.run_dir / "aggregate.csv"), before);

  // An interrupted seed is trained again and reproduces its old log.
  const fs::path csv = record_->methods[1].csv_paths[1];
  const std::string old = slurp(csv);
  fs::remove(fs::path(csv).replace_extension(".done"));
  lines.clear();
  run(tiny(Preset::MtsacBaseline, *out_), opt);
  trained = 0;
  for (const auto& l : lines) trained += l.find(": training") != std::string::npos;
  EXPECT_EQ(trained, 1u);
  EXPECT_EQ(slurp(csv), old);
}

TEST_F(TinyRun, PresetsShareMethodDirectories) {
  std::vector<std::string> lines;
  RunOptions opt;
  opt.log = [&](const std::string& s) { lines.push_back(s); };
  ExperimentConfig c = tiny(Preset::PtslOnly, *out_);
  c.seeds = {1};
  const RunRecord r = run(c, opt);
  EXPECT_EQ(r.methods[0].hash, record_->methods[0].hash);
  std::size_t reused = 0;
  for (const auto& l : lines) reused += l.find("mtsac seed 1: reusing") != std::string::npos;
  EXPECT_EQ(reused, 1u);
}

TEST_F(TinyRun, ReportSummarisesCurves) {
  const Report rep = report(*record_, 0.3);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& row : rep.rows) {
    std::vector<std::pair<std::size_t, double>> curve;
    double best = 0.0;
    for (const auto& a : record_->aggregate) {
      if (a.method != row.method || a.task_id != -1) continue;
      curve.emplace_back(a.step, a.mean);
      best = std::max(best, a.mean);
      if (a.step == 300) {
        EXPECT_EQ(row.final_success, a.mean);
      }
    }
    EXPECT_EQ(row.final_step, 300u);
    EXPECT_EQ(row.best_success, best);
    EXPECT_EQ(row.step_to_threshold, oracle::scan_threshold(curve, 0.3));
    EXPECT_EQ(row.seeds, 3u);
  }
  EXPECT_EQ(rep.plot.size(), 6u);
  EXPECT_NE(rep.table().find("shared-blind"), std::string::npos);
  EXPECT_EQ(rep.plot_csv(), slurp(record_->run_dir / "plot.csv"));
}

TEST(Run, IdenticalSeedsGiveIdenticalBytes) {
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  ExperimentConfig ca = tiny(Preset::PtslOnly, a), cb = tiny(Preset::PtslOnly, b);
  ca.seeds = cb.seeds = {5};
  RunOptions two;
  two.jobs = 2;
  const RunRecord ra = run(ca), rb = run(cb, two);
  for (std::size_t i = 0; i < ra.methods.size(); ++i)
    EXPECT_EQ(slurp(ra.methods[i].csv_paths[0]), slurp(rb.methods[i].csv_paths[0]));
  EXPECT_EQ(slurp(ra.run_dir / "aggregate.csv"), slurp(rb.run_dir / "aggregate.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Report, SingleCheckpoint) {
  RunRecord r;
  r.methods.push_back({"solo", "0", 10, {1}, {}});
  r.aggregate.push_back({"solo", 0, 500, 1, 0.4, 0.0});
  r.aggregate.push_back({"solo", -1, 500, 1, 0.6, 0.0});
  const Report rep = report(r, 0.5);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].final_success, 0.6);
  EXPECT_EQ(rep.rows[0].best_success, 0.6);
  EXPECT_EQ(rep.rows[0].step_to_threshold, std::optional<std::size_t>{500});
  EXPECT_FALSE(report(r, 0.7).rows[0].step_to_threshold.has_value());
}

TEST(Report, EmptyRecordRaises) {
  RunRecord r;
  EXPECT_THROW(report(r), EmptyReportError);
  r.methods.push_back({"none", "0", 10, {}, {}});
  EXPECT_THROW(report(r), EmptyReportError);
}

TEST(Report, StepToThresholdAgreesWithScan) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AggregateRow> curve;
    std::vector<std::pair<std::size_t, double>> plain;
    for (int k = 0; k < 12; ++k) {
      const std::size_t step = (k * 7 % 12 + 1) * 1000;  // out of order
      const double v = u(rng);
      curve.push_back({"m", -1, step, 4, v, 0.0});
      plain.emplace_back(step, v);
    }
    const double th = u(rng);
    EXPECT_EQ(step_to_threshold(curve, th), oracle::scan_threshold(plain, th));
  }
}

}  // namespace
}  // namespace ptsl
