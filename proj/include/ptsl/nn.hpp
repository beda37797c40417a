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

// Layers, parameter lists and the Adam optimizer shared by every network.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ptsl/autodiff.hpp"

namespace ptsl {

using Rng = std::mt19937_64;

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ad::Tensor fan_in_uniform(ad::Shape shape, std::size_t fan_in, Rng& rng);

[[nodiscard]] std::size_t count_scalars(const ParameterList& params);
void zero_grads(ParameterList& params);
/// Copies values from `src` into `dst`; names and shapes must agree pairwise.
void copy_values(const ParameterList& src, ParameterList& dst);
/// dst <- tau * src + (1 - tau) * dst, element-wise.
void blend_values(const ParameterList& src, ParameterList& dst, double tau);
void set_requires_grad(ParameterList& params, bool flag);
void append(ParameterList& into, const ParameterList& more);

/// x * weight + bias, with weight stored in x out.
struct Linear {
  ad::Tensor weight;
  ad::Tensor bias;  // undefined for bias-free maps

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);

  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x) const;
  void collect(ParameterList& out, const std::string& prefix) const;
  [[nodiscard]] std::size_t in_dim() const { return weight.rows(); }
  [[nodiscard]] std::size_t out_dim() const { return weight.cols(); }
};

/// ReLU multilayer perceptron; no activation after the last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& widths, Rng& rng);

  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& x) const;
  [[nodiscard]] ParameterList parameters(const std::string& prefix) const;
  [[nodiscard]] std::size_t in_dim() const { return layers_.front().in_dim(); }
  [[nodiscard]] std::size_t out_dim() const { return layers_.back().out_dim(); }
  [[nodiscard]] const std::vector<Linear>& layers() const { return layers_; }

  /// Scalar count for the given layer widths.
  static std::size_t count(const std::vector<std::size_t>& widths);

 private:
  std::vector<Linear> layers_;
};

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(ParameterList params, AdamOptions options);

  void zero_grad();
  void step();
  [[nodiscard]] const ParameterList& parameters() const { return params_; }
  [[nodiscard]] std::int64_t steps() const { return t_; }

 private:
  ParameterList params_;
  AdamOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace ptsl
