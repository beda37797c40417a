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

// Encoder + body composition used for actors and critics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "ptsl/backbone.hpp"
#include "ptsl/encoder.hpp"

namespace ptsl {

enum class BodyKind { Dense, Ptsl };

std::string to_string(BodyKind kind);

struct NetworkSpec {
  std::size_t state_dim = 1;
  /// Appended to the encoded state before the body (action width for critics).
  std::size_t extra_input = 0;
  /// Append a one-hot task id to the raw state before encoding.
  bool task_onehot = false;
  EncoderConfig encoder;
  BodyKind body = BodyKind::Ptsl;
  /// input_dim is derived; Dense bodies use only output/hidden/num_hidden.
  NetworkConfig backbone;

  [[nodiscard]] std::size_t encoder_input_dim() const;
  [[nodiscard]] std::size_t body_input_dim() const;
  /// Backbone config with input_dim filled in.
  [[nodiscard]] NetworkConfig resolved_backbone() const;

  /// Closed-form parameter count (encoder + body).
  [[nodiscard]] std::size_t count() const;
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

class TaskNetwork {
 public:
  TaskNetwork(const NetworkSpec& spec, std::uint64_t seed);
  TaskNetwork(TaskNetwork&&) = default;
  TaskNetwork& operator=(TaskNetwork&&) = default;
  TaskNetwork(const TaskNetwork&) = delete;
  TaskNetwork& operator=(const TaskNetwork&) = delete;

  /// Deep copy with every parameter's requires_grad set to `trainable`.
  [[nodiscard]] TaskNetwork clone(bool trainable) const;

  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& state, std::span<const int> task_ids,
                     const ad::Tensor* extra = nullptr) const;

  [[nodiscard]] const NetworkSpec& spec() const { return spec_; }
  [[nodiscard]] ParameterList parameters() const;
  [[nodiscard]] const TaskEncoder& encoder() const { return encoder_; }
  /// nullptr for Dense bodies.
  [[nodiscard]] const PtslBackbone* ptsl() const { return std::get_if<PtslBackbone>(&body_); }

 private:
  NetworkSpec spec_;
  TaskEncoder encoder_;
  std::variant<Mlp, PtslBackbone> body_;
};

}  // namespace ptsl
