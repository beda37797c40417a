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

#include "ptsl/network.hpp"

#include <vector>

namespace ptsl {

std::string to_string(BodyKind kind) { return kind == BodyKind::Dense ? "dense" : "ptsl"; }

std::size_t NetworkSpec::encoder_input_dim() const { return state_dim + (task_onehot ? backbone.num_tasks : 0); }

std::size_t NetworkSpec::body_input_dim() const {
  const std::size_t encoded = encoder.kind == EncoderKind::Identity ? encoder_input_dim() : encoder.output_dim;
  return encoded + extra_input;
}

NetworkConfig NetworkSpec::resolved_backbone() const {
  NetworkConfig c = backbone;
  c.input_dim = body_input_dim();
  return c;
}

namespace {
std::vector<std::size_t> dense_widths(const NetworkConfig& c) {
  std::vector<std::size_t> w{c.input_dim};
  for (std::size_t i = 0; i < c.num_hidden; ++i) w.push_back(c.hidden_dim);
  w.push_back(c.output_dim);
  return w;
}
}  // namespace

std::size_t NetworkSpec::count() const {
  const NetworkConfig c = resolved_backbone();
  const std::size_t body_count = body == BodyKind::Dense ? Mlp::count(dense_widths(c)) : count_parameters(c).total();
  return TaskEncoder::count(encoder, encoder_input_dim(), backbone.num_tasks) + body_count;
}

namespace {
std::variant<Mlp, PtslBackbone> make_body(const NetworkSpec& spec, std::uint64_t seed) {
  const NetworkConfig c = spec.resolved_backbone();
  if (spec.body == BodyKind::Dense) {
    if (c.num_hidden < 1 || c.hidden_dim == 0) throw ConfigError("dense body needs num_hidden >= 1 and hidden_dim > 0");
    Rng rng(seed);
    return Mlp(dense_widths(c), rng);
  }
  return PtslBackbone(c, seed);
}
}  // namespace

TaskNetwork::TaskNetwork(const NetworkSpec& spec, std::uint64_t seed)
    : spec_(spec),
      encoder_(spec.encoder, spec.encoder_input_dim(), spec.backbone.num_tasks, seed ^ 0x9e3779b97f4a7c15ULL),
      body_(make_body(spec, seed)) {}

TaskNetwork TaskNetwork::clone(bool trainable) const {
  TaskNetwork copy(spec_, 0);
  ParameterList dst = copy.parameters();
  copy_values(parameters(), dst);
  set_requires_grad(dst, trainable);
  return copy;
}

ad::Tensor TaskNetwork::forward(ad::Tape& tape, const ad::Tensor& state, std::span<const int> task_ids,
                                const ad::Tensor* extra) const {
  if (state.cols() != spec_.state_dim) {
    throw DimensionError("network expects state width " + std::to_string(spec_.state_dim) + ", got " +
                         ad::to_string(state.shape()));
  }
  if (task_ids.size() != state.rows()) throw DimensionError("one task id per state row required");
  ad::Tensor input = state;
  if (spec_.task_onehot) {
    const std::size_t T = spec_.backbone.num_tasks;
    ad::Tensor onehot = ad::Tensor::zeros({state.rows(), T});
    for (std::size_t r = 0; r < task_ids.size(); ++r) {
      const int id = task_ids[r];
      if (id < 0 || static_cast<std::size_t>(id) >= T) throw TaskError("task id " + std::to_string(id) + " out of range");
      onehot.at(r, static_cast<std::size_t>(id)) = 1.0;
    }
    input = ad::concat_cols(tape, input, onehot);
  }
  ad::Tensor h = encoder_.encode(tape, input, task_ids);
  if (spec_.extra_input > 0) {
    if (extra == nullptr || extra->cols() != spec_.extra_input)
      throw DimensionError("network expects an extra input of width " + std::to_string(spec_.extra_input));
    h = ad::concat_cols(tape, h, *extra);
  }
  if (const auto* mlp = std::get_if<Mlp>(&body_)) {
    for (int id : task_ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= spec_.backbone.num_tasks)
        throw TaskError("task id " + std::to_string(id) + " out of range");
    }
    return mlp->forward(tape, h);
  }
  return std::get<PtslBackbone>(body_).forward(tape, h, task_ids);
}

ParameterList TaskNetwork::parameters() const {
  ParameterList out = encoder_.parameters("encoder.");
  if (const auto* mlp = std::get_if<Mlp>(&body_)) {
    append(out, mlp->parameters("shared"));
  } else {
    append(out, std::get<PtslBackbone>(body_).parameters());
  }
  return out;
}

}  // namespace ptsl
