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

// Projected task-specific layers: a shared dense trunk where every layer is
// paired with a small per-task layer living in a D-dimensional space. The
// task path is entered through a down-projection (H->D, or I->D at the first
// layer) and merged back into the trunk through an up-projection (D->H).
//
//   x_{i+1} = relu(SH_i(x_i) + P_up_i(t_i)),    i < N
//   y       = SH_N(x_N) + P_up_N(t_N)            (or TS_N mapping D->O)
//   t_i     = relu(TS_i_task(g(P_down_i(x_i), t_{i-1})))
//
// with g the residual combiner (bypassed at layer 0).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ptsl/autodiff.hpp"
#include "ptsl/errors.hpp"
#include "ptsl/nn.hpp"

namespace ptsl {

enum class ProjectionMode { Shared, Independent };
enum class ResidualMode { None, Addition, LearnableSum, LearnableProjection };

std::string to_string(ProjectionMode mode);
std::string to_string(ResidualMode mode);
ProjectionMode parse_projection_mode(const std::string& text);
ResidualMode parse_residual_mode(const std::string& text);

struct NetworkConfig {
  std::size_t input_dim = 1;   // I
  std::size_t output_dim = 1;  // O
  std::size_t hidden_dim = 1;  // H
  std::size_t task_dim = 1;    // D
  std::size_t num_tasks = 1;   // T
  std::size_t num_hidden = 1;  // N, so N+1 layers in total
  ProjectionMode projection_mode = ProjectionMode::Shared;
  ResidualMode residual_mode = ResidualMode::None;
  bool first_layer_down_projection = true;
  bool last_layer_up_projection = false;

  /// Throws ConfigError unless every dimension is positive and D <= H.
  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct ParameterBreakdown {
  std::size_t shared = 0;       // trunk weights and biases
  std::size_t task = 0;         // all TS layers over all tasks
  std::size_t projections = 0;  // every down/up projection
  std::size_t residual = 0;     // alpha/beta or P_g

  // Task-side cost of the boundary layers, projection included when enabled.
  std::size_t first_task_layer = 0;
  std::size_t last_task_layer = 0;

  [[nodiscard]] std::size_t total() const { return shared + task + projections + residual; }
};

/// Closed-form count of trainable scalars.
ParameterBreakdown count_parameters(const NetworkConfig& config);

/// Parameters of the residual combiner g. LearnableProjection stores P_g
/// transposed (2D x D) so that g = concat(x_proj, y_prev) * P_g^T.
struct ResidualParams {
  ad::Tensor alpha;
  ad::Tensor beta;
  ad::Tensor projection;
};

ad::Tensor combine_residual(ad::Tape& tape, ResidualMode mode, const ad::Tensor& x_proj, const ad::Tensor& y_prev,
                            const ResidualParams& params);

class PtslBackbone {
 public:
  /// Builds and initializes with init_weights(seed).
  PtslBackbone(const NetworkConfig& config, std::uint64_t seed);

  /// Fan-in uniform shared layers, task layers and down-projections; zero
  /// up-projections (and zero TS_N when it maps straight to the output), so
  /// every task starts out computing the shared trunk.
  void init_weights(std::uint64_t seed);

  /// Single-task forward.
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x, int task_id) const;
  /// Mixed-task forward: row r is routed through task_ids[r].
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x, std::span<const int> task_ids) const;
  /// The trunk alone, with every task path removed.
  ad::Tensor forward_shared(ad::Tape& tape, const ad::Tensor& x) const;

  [[nodiscard]] const NetworkConfig& config() const { return config_; }
  [[nodiscard]] ParameterList parameters(const std::string& prefix = "") const;
  /// Parameters belonging to one task's private layers.
  [[nodiscard]] ParameterList task_parameters(int task_id) const;

  [[nodiscard]] const Linear& shared_layer(std::size_t layer) const { return shared_[layer]; }
  [[nodiscard]] const ad::Tensor& task_weight(std::size_t layer, int task) const;
  [[nodiscard]] const ad::Tensor& task_bias(std::size_t layer, int task) const;
  /// Down-projection used at `layer`; undefined at layer 0 without one.
  [[nodiscard]] const ad::Tensor& down_projection(std::size_t layer) const;
  /// Up-projection used at `layer`; undefined at layer N without one.
  [[nodiscard]] const ad::Tensor& up_projection(std::size_t layer) const;
  [[nodiscard]] const ResidualParams& residual_params() const { return residual_; }

 private:
  void check_task(int task_id) const;
  void check_width(const ad::Tensor& x) const;

  NetworkConfig config_;
  std::vector<Linear> shared_;                        // N+1
  std::vector<std::vector<ad::Tensor>> task_w_;       // [layer][task]
  std::vector<std::vector<ad::Tensor>> task_b_;       // [layer][task]
  std::vector<ad::Tensor> down_;                      // [layer], aliasing the shared map in Shared mode
  std::vector<ad::Tensor> up_;                        // [layer]
  ResidualParams residual_;
};

/// Thrown when no configuration fits under the target.
class BudgetInfeasible : public ConfigError {
 public:
  BudgetInfeasible(const std::string& what, NetworkConfig closest, std::size_t closest_count)
      : ConfigError(what), closest_(closest), closest_count_(closest_count) {}
  [[nodiscard]] const NetworkConfig& closest() const { return closest_; }
  [[nodiscard]] std::size_t closest_count() const { return closest_count_; }

 private:
  NetworkConfig closest_;
  std::size_t closest_count_;
};

struct BudgetSearch {
  NetworkConfig base;  // everything except H and D
  std::size_t min_hidden = 1;
  std::size_t max_hidden = 512;
  std::size_t min_task_dim = 1;
  std::size_t max_task_dim = 128;
  /// When false D stays at base.task_dim and only H is searched.
  bool search_task_dim = true;
};

using ParameterCounter = std::function<std::size_t(const NetworkConfig&)>;

/// Largest count not exceeding `target` over the (H, D) grid with D <= H.
/// Ties prefer larger H, then larger D. `counter` defaults to
/// count_parameters(config).total().
NetworkConfig budget_match(std::size_t target, const BudgetSearch& search, const ParameterCounter& counter = {});

}  // namespace ptsl
