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

// Independent reference computations used by the tests, the acceptance
// binary and the `oracle` CLI verb. Nothing here calls the code it checks
// beyond reading parameter values.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptsl/autodiff.hpp"
#include "ptsl/backbone.hpp"
#include "ptsl/encoder.hpp"
#include "ptsl/nn.hpp"

namespace ptsl::oracle {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // tensor with the largest error
  std::size_t scalars = 0;
};

/// Central differences on every scalar of `params`. Relative error per
/// tensor is |g - n| / max(|g| + |n|, floor) with 2-norms; tensors whose
/// two gradients are both below `floor` count as exact.
GradCheckResult finite_difference(const std::function<ad::Tensor(ad::Tape&)>& loss, const ParameterList& params,
                                  double step = 1e-5, double floor = 1e-9);

/// Overwrites every parameter with U(-scale, scale) so no gradient path is
/// trivially zero.
void randomize(const ParameterList& params, std::uint64_t seed, double scale = 0.5);

const ad::Tensor& find(const ParameterList& params, const std::string& name);

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major rows

Mat to_mat(const ad::Tensor& t);

/// Plain-loop backbone forward for one input row.
Vec backbone_forward(const NetworkConfig& config, const ParameterList& params, const Vec& x, int task);

/// Plain-loop mixture-of-experts encoder for one input row.
Vec mixture_forward(const EncoderConfig& config, const ParameterList& params, std::size_t num_tasks, const Vec& x,
                    int task);

/// Softmax of the attention MLP on one task's context.
Vec mixture_weights(const ParameterList& params, int task);

/// Count obtained by constructing the backbone and summing parameter shapes.
std::size_t enumerate_parameters(const NetworkConfig& config);

/// Independent grid scan with the documented tie rules.
std::optional<NetworkConfig> exhaustive_budget_search(std::size_t target, const BudgetSearch& search,
                                                      const std::function<std::size_t(const NetworkConfig&)>& counter);

struct GridResult {
  double best_success = 0.0;
  double best_ax = 0.0, best_ay = 0.0;
  std::size_t policies = 0;
};

/// Every constant action on a (n x n) grid over [-1, 1]^2, evaluated for
/// `episodes` seeded resets on each env; reports the best mean success.
GridResult best_constant_policy(const std::vector<std::string>& env_ids, std::size_t n, std::size_t episodes,
                                std::uint64_t seed);

struct DensityEstimate {
  double density = 0.0;
  double stderr_ = 0.0;
};

/// Histogram estimate of the density of tanh(mu + sigma * eps) at `a`.
DensityEstimate tanh_gaussian_density(double mu, double sigma, double a, std::size_t samples, double half_width,
                                      std::uint64_t seed);

/// target after k soft updates toward a fixed online value.
double blend(double target, double online, double tau, int k);

/// r + gamma (1 - done) (min(q1, q2) - alpha log_prob).
double td_target(double r, double gamma, double done, double q1, double q2, double alpha, double log_prob);

struct AggregateCell {
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Reads metric CSVs with its own parser; keyed by (task_id, step).
std::map<std::pair<int, std::size_t>, AggregateCell> recompute_aggregate(const std::vector<std::filesystem::path>& csvs);

/// First step whose value reaches `threshold`, scanning left to right over
/// pairs sorted by step.
std::optional<std::size_t> scan_threshold(std::vector<std::pair<std::size_t, double>> curve, double threshold);

}  // namespace ptsl::oracle
