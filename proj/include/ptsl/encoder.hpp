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

// State encoders placed in front of a backbone.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptsl/autodiff.hpp"
#include "ptsl/nn.hpp"

namespace ptsl {

enum class EncoderKind { Identity, Mlp, CareMixture };

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& text);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Identity;
  std::size_t num_experts = 4;       // A
  std::size_t expert_hidden = 50;    // H_A
  std::size_t context_dim = 16;
  std::size_t attention_hidden = 32;
  std::size_t output_dim = 32;       // E

  /// `allow_single_expert` exists for tests of the degenerate A=1 mixture.
  void validate(bool allow_single_expert = false) const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Identity, a single MLP, or a mixture of A expert MLPs whose weights are a
/// softmax over an attention MLP applied to a learnable per-task context.
class TaskEncoder {
 public:
  TaskEncoder(const EncoderConfig& config, std::size_t input_dim, std::size_t num_tasks, std::uint64_t seed,
              bool allow_single_expert = false);

  ad::Tensor encode(ad::Tape& tape, const ad::Tensor& state, std::span<const int> task_ids) const;
  ad::Tensor encode(ad::Tape& tape, const ad::Tensor& state, int task_id) const;

  /// T x A matrix of mixture weights (CareMixture only).
  ad::Tensor attention_weights(ad::Tape& tape) const;

  [[nodiscard]] std::size_t input_dim() const { return input_dim_; }
  [[nodiscard]] std::size_t output_dim() const;
  [[nodiscard]] const EncoderConfig& config() const { return config_; }
  [[nodiscard]] ParameterList parameters(const std::string& prefix = "encoder.") const;

  [[nodiscard]] const std::vector<Mlp>& experts() const { return experts_; }
  [[nodiscard]] const ad::Tensor& contexts() const { return contexts_; }
  [[nodiscard]] const Mlp& attention() const { return attention_; }

  static std::size_t count(const EncoderConfig& config, std::size_t input_dim, std::size_t num_tasks);

 private:
  void check_tasks(std::span<const int> task_ids) const;

  EncoderConfig config_;
  std::size_t input_dim_;
  std::size_t num_tasks_;
  std::vector<Mlp> experts_;  // one for Mlp, A for CareMixture
  ad::Tensor contexts_;       // T x context_dim
  Mlp attention_;
};

}  // namespace ptsl
