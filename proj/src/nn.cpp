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

#include "ptsl/nn.hpp"

#include <cmath>

#include "ptsl/errors.hpp"

namespace ptsl {

ad::Tensor fan_in_uniform(ad::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape.size());
  for (double& v : values) v = dist(rng);
  return ad::Tensor::from_values(shape, std::move(values), true);
}

std::size_t count_scalars(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

void zero_grads(ParameterList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

namespace {
void check_pairing(const ParameterList& src, const ParameterList& dst) {
  if (src.size() != dst.size()) throw DimensionError("parameter lists differ in length");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name || src[i].tensor.shape() != dst[i].tensor.shape()) {
      throw DimensionError("parameter mismatch: " + src[i].name + " vs " + dst[i].name);
    }
  }
}
}  // namespace

void copy_values(const ParameterList& src, ParameterList& dst) {
  check_pairing(src, dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].tensor.values();
    auto to = dst[i].tensor.mutable_values();
    std::copy(from.begin(), from.end(), to.begin());
  }
}

void blend_values(const ParameterList& src, ParameterList& dst, double tau) {
  check_pairing(src, dst);
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].tensor.values();
    auto to = dst[i].tensor.mutable_values();
    for (std::size_t k = 0; k < from.size(); ++k) to[k] = tau * from[k] + (1.0 - tau) * to[k];
  }
}

void set_requires_grad(ParameterList& params, bool flag) {
  for (auto& p : params) p.tensor.set_requires_grad(flag);
}

void append(ParameterList& into, const ParameterList& more) { into.insert(into.end(), more.begin(), more.end()); }

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(fan_in_uniform({in, out}, in, rng)) {
  if (with_bias) bias = fan_in_uniform({1, out}, in, rng);
}

ad::Tensor Linear::forward(ad::Tape& tape, const ad::Tensor& x) const {
  auto y = ad::matmul(tape, x, weight);
  return bias.defined() ? ad::add(tape, y, bias) : y;
}

void Linear::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

Mlp::Mlp(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers_.emplace_back(widths[i], widths[i + 1], rng);
}

ad::Tensor Mlp::forward(ad::Tape& tape, const ad::Tensor& x) const {
  ad::Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(tape, h);
    if (i + 1 < layers_.size()) h = ad::relu(tape, h);
  }
  return h;
}

ParameterList Mlp::parameters(const std::string& prefix) const {
  ParameterList out;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + "." + std::to_string(i));
  return out;
}

std::size_t Mlp::count(const std::vector<std::size_t>& widths) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) n += widths[i] * widths[i + 1] + widths[i + 1];
  return n;
}

Adam::Adam(ParameterList params, AdamOptions options) : params_(std::move(params)), opt_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void Adam::zero_grad() { zero_grads(params_); }

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].tensor;
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = opt_.beta1 * m[k] + (1.0 - opt_.beta1) * g[k];
      v[k] = opt_.beta2 * v[k] + (1.0 - opt_.beta2) * g[k] * g[k];
      w[k] -= opt_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt_.eps);
    }
  }
}

}  // namespace ptsl
