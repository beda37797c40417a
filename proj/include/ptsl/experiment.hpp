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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptsl/config.hpp"
#include "ptsl/sac.hpp"
#include "ptsl/train.hpp"

namespace ptsl {

inline constexpr double kBudgetTolerance = 0.005;

struct TaskShape {
  std::size_t state_dim = 6;
  std::size_t action_dim = 2;
  std::size_t num_tasks = 1;
  static TaskShape of_suite(const std::string& suite_id);
};

enum class BudgetRole { Reference, Matched, Exempt };
std::string to_string(BudgetRole role);

struct Method {
  std::string name;
  BudgetRole role = BudgetRole::Reference;
  AgentSpec agent;
  std::size_t parameter_count = 0;  // agent level: actor, critics, targets, temperatures
};

/// Builds actor and critic specs that share one set of body widths.
AgentSpec make_agent_spec(const TaskShape& shape, BodyKind body, bool task_onehot, const EncoderConfig& encoder,
                          const NetworkConfig& widths);

/// Instantiates the preset's architectures. Matched methods keep the
/// reference widths when already within tolerance and otherwise search H and
/// D for the largest count not above the reference.
std::vector<Method> build_methods(const ExperimentConfig& config, const TaskShape& shape);

/// Throws ConfigError if a non-exempt method misses the reference count by
/// more than kBudgetTolerance.
void check_budget(const std::vector<Method>& methods);

/// Identifies one method's training runs independently of preset and seeds.
std::string method_hash(const Method& method, const ExperimentConfig& config);

struct AggregateRow {
  std::string method;
  int task_id = -1;
  std::size_t step = 0;
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)) of success per step and
/// task over the given logs. Steps missing from any log are dropped.
std::vector<AggregateRow> aggregate(const std::string& method, const std::vector<MetricsLog>& logs);

struct MethodRecord {
  std::string name;
  std::string hash;
  std::size_t parameter_count = 0;
  std::vector<std::uint64_t> seeds;  // completed seeds
  std::vector<std::filesystem::path> csv_paths;
};

struct RunRecord {
  std::string config_hash;
  std::string preset;
  std::filesystem::path run_dir;
  std::vector<std::uint64_t> seeds;  // declared
  std::vector<MethodRecord> methods;
  std::vector<AggregateRow> aggregate;
  bool complete = false;
  std::string error;

  void save(const std::filesystem::path& path) const;
  static RunRecord load(const std::filesystem::path& path);
};

struct RunOptions {
  std::size_t jobs = 1;
  std::function<void(const std::string&)> log;
};

std::filesystem::path run_directory(const ExperimentConfig& config);

/// Trains every (method, seed) pair not already completed under
/// output_dir/methods, then writes aggregate.csv, summary.txt, plot.csv and
/// run.json into the run directory. A failed seed leaves completed ones in
/// place, records the run as incomplete and rethrows.
RunRecord run(const ExperimentConfig& config, const RunOptions& options = {});

class EmptyReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReportRow {
  std::string method;
  std::size_t parameter_count = 0;
  std::size_t seeds = 0;
  std::size_t final_step = 0;
  double final_success = 0.0;
  double final_stderr = 0.0;
  double best_success = 0.0;
  std::optional<std::size_t> step_to_threshold;
};

struct Report {
  double threshold = 0.5;
  std::vector<ReportRow> rows;
  std::vector<AggregateRow> plot;  // task-mean curves

  [[nodiscard]] std::string table() const;
  [[nodiscard]] std::string plot_csv() const;
};

/// First step whose mean reaches `threshold`, scanning in step order.
std::optional<std::size_t> step_to_threshold(const std::vector<AggregateRow>& curve, double threshold);

Report report(const RunRecord& record, double threshold = 0.5);

}  // namespace ptsl
