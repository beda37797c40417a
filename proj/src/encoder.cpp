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

#include "ptsl/encoder.hpp"

#include "ptsl/errors.hpp"

namespace ptsl {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Identity: return "identity";
    case EncoderKind::Mlp: return "mlp";
    case EncoderKind::CareMixture: return "care";
  }
  return "identity";
}

EncoderKind parse_encoder_kind(const std::string& text) {
  for (auto k : {EncoderKind::Identity, EncoderKind::Mlp, EncoderKind::CareMixture})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown encoder kind '" + text + "'");
}

void EncoderConfig::validate(bool allow_single_expert) const {
  if (kind == EncoderKind::Identity) return;
  if (expert_hidden == 0 || output_dim == 0) throw ConfigError("encoder dimensions must be positive");
  if (kind == EncoderKind::CareMixture) {
    if (num_experts < (allow_single_expert ? 1u : 2u)) throw ConfigError("mixture encoder needs at least 2 experts");
    if (context_dim == 0 || attention_hidden == 0) throw ConfigError("context dimensions must be positive");
  }
}

TaskEncoder::TaskEncoder(const EncoderConfig& config, std::size_t input_dim, std::size_t num_tasks,
                         std::uint64_t seed, bool allow_single_expert)
    : config_(config), input_dim_(input_dim), num_tasks_(num_tasks) {
  config_.validate(allow_single_expert);
  if (input_dim == 0 || num_tasks == 0) throw ConfigError("encoder input_dim and num_tasks must be positive");
  Rng rng(seed);
  const std::vector<std::size_t> widths{input_dim, config_.expert_hidden, config_.output_dim};
  switch (config_.kind) {
    case EncoderKind::Identity: break;
    case EncoderKind::Mlp: experts_.emplace_back(widths, rng); break;
    case EncoderKind::CareMixture: {
      for (std::size_t a = 0; a < config_.num_experts; ++a) experts_.emplace_back(widths, rng);
      std::normal_distribution<double> unit(0.0, 1.0);
      std::vector<double> ctx(num_tasks * config_.context_dim);
      for (double& v : ctx) v = unit(rng);
      contexts_ = ad::Tensor::from_values({num_tasks, config_.context_dim}, std::move(ctx), true);
      attention_ = Mlp({config_.context_dim, config_.attention_hidden, config_.num_experts}, rng);
      break;
    }
  }
}

std::size_t TaskEncoder::output_dim() const {
  return config_.kind == EncoderKind::Identity ? input_dim_ : config_.output_dim;
}

void TaskEncoder::check_tasks(std::span<const int> task_ids) const {
  for (int id : task_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= num_tasks_) {
      throw TaskError("task id " + std::to_string(id) + " out of range [0," + std::to_string(num_tasks_) + ")");
    }
  }
}

ad::Tensor TaskEncoder::attention_weights(ad::Tape& tape) const {
  if (config_.kind != EncoderKind::CareMixture) throw ContractError("attention weights exist only for mixtures");
  return ad::softmax_rows(tape, attention_.forward(tape, contexts_));
}

ad::Tensor TaskEncoder::encode(ad::Tape& tape, const ad::Tensor& state, int task_id) const {
  const std::vector<int> ids(state.rows(), task_id);
  return encode(tape, state, ids);
}

ad::Tensor TaskEncoder::encode(ad::Tape& tape, const ad::Tensor& state, std::span<const int> task_ids) const {
  check_tasks(task_ids);
  if (state.cols() != input_dim_) {
    throw DimensionError("encoder expects width " + std::to_string(input_dim_) + ", got " +
                         ad::to_string(state.shape()));
  }
  if (task_ids.size() != state.rows()) throw DimensionError("one task id per state row required");
  switch (config_.kind) {
    case EncoderKind::Identity: return state;
    case EncoderKind::Mlp: return experts_.front().forward(tape, state);
    case EncoderKind::CareMixture: break;
  }
  // Attention depends only on the task: weights for all T contexts, then one
  // row per sample.
  const ad::Tensor per_task = attention_weights(tape);
  const ad::Tensor w = ad::gather_rows(tape, per_task, task_ids);
  ad::Tensor mix;
  for (std::size_t a = 0; a < experts_.size(); ++a) {
    const ad::Tensor e = experts_[a].forward(tape, state);
    const ad::Tensor term = ad::mul(tape, e, ad::slice_cols(tape, w, a, a + 1));
    mix = mix.defined() ? ad::add(tape, mix, term) : term;
  }
  return mix;
}

ParameterList TaskEncoder::parameters(const std::string& prefix) const {
  ParameterList out;
  if (config_.kind == EncoderKind::Mlp) append(out, experts_.front().parameters(prefix + "mlp"));
  if (config_.kind == EncoderKind::CareMixture) {
    for (std::size_t a = 0; a < experts_.size(); ++a)
      append(out, experts_[a].parameters(prefix + "expert." + std::to_string(a)));
    out.push_back({prefix + "contexts", contexts_});
    append(out, attention_.parameters(prefix + "attention"));
  }
  return out;
}

std::size_t TaskEncoder::count(const EncoderConfig& config, std::size_t input_dim, std::size_t num_tasks) {
  const std::size_t expert = Mlp::count({input_dim, config.expert_hidden, config.output_dim});
  switch (config.kind) {
    case EncoderKind::Identity: return 0;
    case EncoderKind::Mlp: return expert;
    case EncoderKind::CareMixture:
      return config.num_experts * expert + num_tasks * config.context_dim +
             Mlp::count({config.context_dim, config.attention_hidden, config.num_experts});
  }
  return 0;
}

}  // namespace ptsl
