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

#include "ptsl/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptsl {

std::string to_string(ProjectionMode mode) { return mode == ProjectionMode::Shared ? "shared" : "independent"; }

std::string to_string(ResidualMode mode) {
  switch (mode) {
    case ResidualMode::None: return "none";
    case ResidualMode::Addition: return "addition";
    case ResidualMode::LearnableSum: return "learnable-sum";
    case ResidualMode::LearnableProjection: return "learnable-projection";
  }
  return "none";
}

ProjectionMode parse_projection_mode(const std::string& text) {
  if (text == "shared") return ProjectionMode::Shared;
  if (text == "independent") return ProjectionMode::Independent;
  throw ConfigError("unknown projection mode '" + text + "'");
}

ResidualMode parse_residual_mode(const std::string& text) {
  for (auto m : {ResidualMode::None, ResidualMode::Addition, ResidualMode::LearnableSum,
                 ResidualMode::LearnableProjection}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("unknown residual mode '" + text + "'");
}

void NetworkConfig::validate() const {
  if (input_dim == 0 || output_dim == 0 || hidden_dim == 0 || task_dim == 0)
    throw ConfigError("network dimensions must be positive");
  if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
  if (num_hidden < 1) throw ConfigError("num_hidden must be >= 1");
  if (task_dim > hidden_dim) {
    throw ConfigError("task_dim (" + std::to_string(task_dim) + ") must not exceed hidden_dim (" +
                      std::to_string(hidden_dim) + ")");
  }
}

ParameterBreakdown count_parameters(const NetworkConfig& c) {
  c.validate();
  const std::size_t I = c.input_dim, O = c.output_dim, H = c.hidden_dim, D = c.task_dim, T = c.num_tasks,
                    N = c.num_hidden;
  ParameterBreakdown b;
  b.shared = (I * H + H) + (N - 1) * (H * H + H) + (H * O + O);

  const std::size_t inner = D * D + D;
  const std::size_t first_ts = c.first_layer_down_projection ? T * inner : T * (I * D + D);
  const std::size_t last_ts = c.last_layer_up_projection ? T * inner : T * (D * O + O);
  b.task = first_ts + (N - 1) * T * inner + last_ts;

  const std::size_t first_proj = c.first_layer_down_projection ? I * D : 0;
  const std::size_t last_proj = c.last_layer_up_projection ? D * O : 0;
  const std::size_t copies = c.projection_mode == ProjectionMode::Shared ? 1 : N;
  b.projections = first_proj + last_proj + copies * (H * D) + copies * (D * H);

  switch (c.residual_mode) {
    case ResidualMode::None:
    case ResidualMode::Addition: b.residual = 0; break;
    case ResidualMode::LearnableSum: b.residual = 2; break;
    case ResidualMode::LearnableProjection: b.residual = 2 * D * D; break;
  }

  b.first_task_layer = first_proj + first_ts;
  b.last_task_layer = last_proj + last_ts;
  return b;
}

ad::Tensor combine_residual(ad::Tape& tape, ResidualMode mode, const ad::Tensor& x_proj, const ad::Tensor& y_prev,
                            const ResidualParams& params) {
  if (x_proj.shape() != y_prev.shape()) {
    throw DimensionError("combine_residual: " + ad::to_string(x_proj.shape()) + " vs " + ad::to_string(y_prev.shape()));
  }
  switch (mode) {
    case ResidualMode::None: return x_proj;
    case ResidualMode::Addition: return ad::add(tape, x_proj, y_prev);
    case ResidualMode::LearnableSum:
      if (!params.alpha.defined() || !params.beta.defined())
        throw ConfigError("learnable-sum residual requires alpha and beta");
      return ad::add(tape, ad::mul(tape, x_proj, params.alpha), ad::mul(tape, y_prev, params.beta));
    case ResidualMode::LearnableProjection:
      if (!params.projection.defined()) throw ConfigError("learnable-projection residual requires P_g");
      return ad::matmul(tape, ad::concat_cols(tape, x_proj, y_prev), params.projection);
  }
  throw ConfigError("unknown residual mode");
}

namespace {

void fill_uniform(ad::Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.mutable_values()) v = dist(rng);
}

void fill_zero(ad::Tensor& t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

ad::Tensor param(std::size_t rows, std::size_t cols) { return ad::Tensor::zeros({rows, cols}, true); }

}  // namespace

PtslBackbone::PtslBackbone(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t I = config_.input_dim, O = config_.output_dim, H = config_.hidden_dim, D = config_.task_dim,
                    T = config_.num_tasks, N = config_.num_hidden;
  const std::size_t layers = N + 1;

  shared_.resize(layers);
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t in = i == 0 ? I : H;
    const std::size_t out = i == N ? O : H;
    shared_[i].weight = param(in, out);
    shared_[i].bias = param(1, out);
  }

  task_w_.assign(layers, {});
  task_b_.assign(layers, {});
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t in = (i == 0 && !config_.first_layer_down_projection) ? I : D;
    const std::size_t out = (i == N && !config_.last_layer_up_projection) ? O : D;
    for (std::size_t j = 0; j < T; ++j) {
      task_w_[i].push_back(param(in, out));
      task_b_[i].push_back(param(1, out));
    }
  }

  down_.assign(layers, {});
  up_.assign(layers, {});
  if (config_.first_layer_down_projection) down_[0] = param(I, D);
  if (config_.last_layer_up_projection) up_[N] = param(D, O);
  if (config_.projection_mode == ProjectionMode::Shared) {
    const ad::Tensor down = param(H, D);
    const ad::Tensor up = param(D, H);
    for (std::size_t i = 1; i <= N; ++i) down_[i] = down;
    for (std::size_t i = 0; i < N; ++i) up_[i] = up;
  } else {
    for (std::size_t i = 1; i <= N; ++i) down_[i] = param(H, D);
    for (std::size_t i = 0; i < N; ++i) up_[i] = param(D, H);
  }

  switch (config_.residual_mode) {
    case ResidualMode::LearnableSum:
      residual_.alpha = param(1, 1);
      residual_.beta = param(1, 1);
      break;
    case ResidualMode::LearnableProjection: residual_.projection = param(2 * D, D); break;
    default: break;
  }

  init_weights(seed);
}

void PtslBackbone::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t N = config_.num_hidden, D = config_.task_dim;
  for (auto& layer : shared_) {
    fill_uniform(layer.weight, layer.weight.rows(), rng);
    fill_uniform(layer.bias, layer.weight.rows(), rng);
  }
  for (std::size_t i = 0; i <= N; ++i) {
    const bool output_map = i == N && !config_.last_layer_up_projection;
    for (std::size_t j = 0; j < task_w_[i].size(); ++j) {
      auto& w = task_w_[i][j];
      auto& b = task_b_[i][j];
      if (output_map) {
        // Plays the role of the up-projection, so it starts at zero too.
        fill_zero(w);
        fill_zero(b);
      } else {
        fill_uniform(w, w.rows(), rng);
        fill_uniform(b, w.rows(), rng);
      }
    }
  }
  // Each distinct projection is filled once, in layer order.
  std::vector<const ad::detail::Node*> seen;
  seen.reserve(2 * (N + 1));
  for (auto& p : down_) {
    if (!p.defined()) continue;
    if (std::find(seen.begin(), seen.end(), p.node()) != seen.end()) continue;
    seen.push_back(p.node());
    fill_uniform(p, p.rows(), rng);
  }
  for (auto& p : up_) {
    if (p.defined()) fill_zero(p);
  }
  if (residual_.alpha.defined()) {
    residual_.alpha.mutable_values()[0] = 1.0;
    residual_.beta.mutable_values()[0] = 0.0;
  }
  if (residual_.projection.defined()) {
    fill_zero(residual_.projection);
    for (std::size_t k = 0; k < D; ++k) residual_.projection.at(k, k) = 1.0;
  }
}

void PtslBackbone::check_task(int task_id) const {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= config_.num_tasks) {
    throw TaskError("task id " + std::to_string(task_id) + " out of range [0," + std::to_string(config_.num_tasks) +
                    ")");
  }
}

void PtslBackbone::check_width(const ad::Tensor& x) const {
  if (x.cols() != config_.input_dim) {
    throw DimensionError("backbone expects input width " + std::to_string(config_.input_dim) + ", got " +
                         ad::to_string(x.shape()));
  }
}

ad::Tensor PtslBackbone::forward(ad::Tape& tape, const ad::Tensor& x, int task_id) const {
  check_task(task_id);
  check_width(x);
  const std::vector<int> ids(x.rows(), task_id);
  return forward(tape, x, ids);
}

ad::Tensor PtslBackbone::forward(ad::Tape& tape, const ad::Tensor& x, std::span<const int> task_ids) const {
  check_width(x);
  if (task_ids.size() != x.rows()) throw DimensionError("one task id per input row required");
  for (int id : task_ids) check_task(id);

  const std::size_t N = config_.num_hidden;
  ad::Tensor h = x;
  ad::Tensor t_prev;
  for (std::size_t i = 0; i <= N; ++i) {
    const ad::Tensor s = shared_[i].forward(tape, h);
    ad::Tensor p = down_[i].defined() ? ad::matmul(tape, h, down_[i]) : h;
    if (i > 0) p = combine_residual(tape, config_.residual_mode, p, t_prev, residual_);
    ad::Tensor t = ad::routed_linear(tape, p, task_ids, task_w_[i], task_b_[i]);
    const bool output_map = i == N && !config_.last_layer_up_projection;
    if (!output_map) t = ad::relu(tape, t);
    const ad::Tensor z = ad::add(tape, s, output_map ? t : ad::matmul(tape, t, up_[i]));
    h = i < N ? ad::relu(tape, z) : z;
    t_prev = t;
  }
  return h;
}

ad::Tensor PtslBackbone::forward_shared(ad::Tape& tape, const ad::Tensor& x) const {
  check_width(x);
  ad::Tensor h = x;
  for (std::size_t i = 0; i < shared_.size(); ++i) {
    h = shared_[i].forward(tape, h);
    if (i + 1 < shared_.size()) h = ad::relu(tape, h);
  }
  return h;
}

ParameterList PtslBackbone::parameters(const std::string& prefix) const {
  const std::size_t N = config_.num_hidden;
  ParameterList out;
  for (std::size_t i = 0; i <= N; ++i) shared_[i].collect(out, prefix + "shared." + std::to_string(i));
  for (std::size_t j = 0; j < config_.num_tasks; ++j) {
    for (std::size_t i = 0; i <= N; ++i) {
      const std::string base = prefix + "task." + std::to_string(j) + "." + std::to_string(i);
      out.push_back({base + ".weight", task_w_[i][j]});
      out.push_back({base + ".bias", task_b_[i][j]});
    }
  }
  if (down_[0].defined()) out.push_back({prefix + "proj.down.0", down_[0]});
  if (config_.projection_mode == ProjectionMode::Shared) {
    out.push_back({prefix + "proj.down.shared", down_[1]});
    out.push_back({prefix + "proj.up.shared", up_[0]});
  } else {
    for (std::size_t i = 1; i <= N; ++i) out.push_back({prefix + "proj.down." + std::to_string(i), down_[i]});
    for (std::size_t i = 0; i < N; ++i) out.push_back({prefix + "proj.up." + std::to_string(i), up_[i]});
  }
  if (up_[N].defined()) out.push_back({prefix + "proj.up." + std::to_string(N), up_[N]});
  if (residual_.alpha.defined()) {
    out.push_back({prefix + "residual.alpha", residual_.alpha});
    out.push_back({prefix + "residual.beta", residual_.beta});
  }
  if (residual_.projection.defined()) out.push_back({prefix + "residual.projection", residual_.projection});
  return out;
}

ParameterList PtslBackbone::task_parameters(int task_id) const {
  check_task(task_id);
  const auto j = static_cast<std::size_t>(task_id);
  ParameterList out;
  for (std::size_t i = 0; i < task_w_.size(); ++i) {
    const std::string base = "task." + std::to_string(j) + "." + std::to_string(i);
    out.push_back({base + ".weight", task_w_[i][j]});
    out.push_back({base + ".bias", task_b_[i][j]});
  }
  return out;
}

const ad::Tensor& PtslBackbone::task_weight(std::size_t layer, int task) const {
  check_task(task);
  return task_w_.at(layer)[static_cast<std::size_t>(task)];
}

const ad::Tensor& PtslBackbone::task_bias(std::size_t layer, int task) const {
  check_task(task);
  return task_b_.at(layer)[static_cast<std::size_t>(task)];
}

const ad::Tensor& PtslBackbone::down_projection(std::size_t layer) const { return down_.at(layer); }
const ad::Tensor& PtslBackbone::up_projection(std::size_t layer) const { return up_.at(layer); }

NetworkConfig budget_match(std::size_t target, const BudgetSearch& search, const ParameterCounter& counter) {
  const ParameterCounter count =
      counter ? counter : ParameterCounter([](const NetworkConfig& c) { return count_parameters(c).total(); });
  NetworkConfig best{};
  std::size_t best_count = 0;
  bool found = false;
  NetworkConfig closest{};
  std::size_t closest_count = 0;
  std::size_t closest_gap = std::numeric_limits<std::size_t>::max();

  for (std::size_t h = search.max_hidden; h >= search.min_hidden && h > 0; --h) {
    const std::size_t d_hi = search.search_task_dim ? std::min(search.max_task_dim, h) : search.base.task_dim;
    const std::size_t d_lo = search.search_task_dim ? search.min_task_dim : search.base.task_dim;
    if (d_hi > h) continue;
    for (std::size_t d = d_hi; d >= d_lo && d > 0; --d) {
      NetworkConfig c = search.base;
      c.hidden_dim = h;
      c.task_dim = d;
      const std::size_t n = count(c);
      const std::size_t gap = n > target ? n - target : target - n;
      if (gap < closest_gap) {
        closest_gap = gap;
        closest = c;
        closest_count = n;
      }
      if (n <= target && (!found || n > best_count)) {
        best = c;
        best_count = n;
        found = true;
      }
    }
  }
  if (!found) {
    throw BudgetInfeasible("no configuration within " + std::to_string(target) + " parameters; closest has " +
                               std::to_string(closest_count),
                           closest, closest_count);
  }
  return best;
}

}  // namespace ptsl
