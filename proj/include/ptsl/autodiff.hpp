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

// Minimal dense reverse-mode differentiation over row-major 2-D tensors.
//
// Every value is a matrix (vectors are 1xn or nx1, scalars 1x1). Operations
// are free functions that take the Tape they record onto; an operation is
// recorded only when at least one input requires a gradient, so parameters
// flagged requires_grad=false (target networks, frozen copies) never appear
// on a tape.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptsl::ad {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return rows * cols; }
  friend constexpr bool operator==(Shape, Shape) noexcept = default;
};

std::string to_string(Shape shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is first written
  bool requires_grad = false;
  bool is_leaf = true;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Shared handle to a tensor node. Copying a Tensor aliases the same storage;
/// use clone() or detach() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
  [[nodiscard]] Shape shape() const;
  [[nodiscard]] std::size_t rows() const { return shape().rows; }
  [[nodiscard]] std::size_t cols() const { return shape().cols; }
  [[nodiscard]] std::size_t size() const { return shape().size(); }

  [[nodiscard]] std::span<const double> values() const;
  [[nodiscard]] std::span<double> mutable_values();
  [[nodiscard]] double at(std::size_t row, std::size_t col) const;
  double& at(std::size_t row, std::size_t col);
  /// Value of a 1x1 tensor.
  [[nodiscard]] double item() const;

  [[nodiscard]] bool requires_grad() const;
  void set_requires_grad(bool flag);
  [[nodiscard]] bool is_leaf() const;

  [[nodiscard]] bool has_grad() const;
  /// Gradient buffer; zeros if nothing has been accumulated yet.
  [[nodiscard]] std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Deep copy that does not require gradients.
  [[nodiscard]] Tensor detach() const;
  /// Deep copy preserving requires_grad; the gradient is not copied.
  [[nodiscard]] Tensor clone() const;

  [[nodiscard]] bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }
  [[nodiscard]] const detail::Node* node() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend class Tape;
};

/// Ordered record of differentiable operations for one forward pass.
class Tape {
 public:
  /// A tape built with recording=false never records; every output it
  /// produces has requires_grad=false. Used for rollouts and targets.
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  [[nodiscard]] bool recording() const noexcept { return recording_; }
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] bool empty() const noexcept { return records_.empty(); }

  /// Accumulates d(loss)/d(leaf) into every requires_grad leaf reached from
  /// loss. Intermediate gradients are reset first, so replaying the same tape
  /// twice adds the leaf gradients twice.
  void backward(const Tensor& loss);

  /// True when `tensor` is an input or output of any recorded operation.
  [[nodiscard]] bool references(const Tensor& tensor) const;
  /// Names of recorded operations in order.
  [[nodiscard]] std::vector<std::string_view> op_names() const;

  void clear() noexcept { records_.clear(); }

  // Used by operation implementations.
  Tensor make_output(Shape shape, std::initializer_list<const Tensor*> inputs);
  void record(std::string_view op, std::initializer_list<const Tensor*> inputs, const Tensor& output,
              std::function<void()> backward_fn);
  void record(std::string_view op, std::span<const Tensor> inputs, const Tensor& output,
              std::function<void()> backward_fn);

 private:
  struct Record {
    std::string_view op;
    std::vector<std::shared_ptr<detail::Node>> inputs;
    std::shared_ptr<detail::Node> output;
    std::function<void()> backward_fn;
  };

  bool recording_ = true;
  std::vector<Record> records_;
};

// ---------------------------------------------------------------------------
// Operations. Binary elementwise operations accept a right operand of the same
// shape, 1xn (row broadcast), mx1 (column broadcast) or 1x1 (scalar).

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor minimum(Tape& tape, const Tensor& a, const Tensor& b);

Tensor neg(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
Tensor exp(Tape& tape, const Tensor& a);
/// Throws DomainError on any non-positive element.
Tensor log(Tape& tape, const Tensor& a);
Tensor square(Tape& tape, const Tensor& a);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor add_scalar(Tape& tape, const Tensor& a, double offset);
/// Clamps into [lo, hi]; gradient is zero where the clamp is active.
Tensor clamp(Tape& tape, const Tensor& a, double lo, double hi);
/// log(1 - tanh(u)^2) evaluated as 2*(log 2 - u - softplus(-2u)).
Tensor log1m_tanh_sq(Tape& tape, const Tensor& u);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
/// mxn -> mx1.
Tensor row_sum(Tape& tape, const Tensor& a);
Tensor softmax_rows(Tape& tape, const Tensor& a);

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b);
/// Columns [begin, end).
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end);
/// out[r] = src[rows[r]].
Tensor gather_rows(Tape& tape, const Tensor& src, std::span<const int> rows);

/// Per-row linear map whose weights are selected by route:
/// out[r] = x[r] * weights[routes[r]] + biases[routes[r]]. Weights are
/// in x out, biases 1 x out. Gradients reach only the routes present.
Tensor routed_linear(Tape& tape, const Tensor& x, std::span<const int> routes, std::span<const Tensor> weights,
                     std::span<const Tensor> biases);

}  // namespace ptsl::ad
