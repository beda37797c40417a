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

#include "ptsl/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "ptsl/errors.hpp"

namespace ptsl::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const detail::Node& n) {
  return {n.value.data(), static_cast<Eigen::Index>(n.shape.rows), static_cast<Eigen::Index>(n.shape.cols)};
}
ConstMap grad_view(const detail::Node& n) {
  return {n.grad.data(), static_cast<Eigen::Index>(n.shape.rows), static_cast<Eigen::Index>(n.shape.cols)};
}
MutMap mut_view(std::vector<double>& buf, Shape s) {
  return {buf.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

detail::Node& node_of(const Tensor& t) {
  if (!t.defined()) throw ContractError("operation on an undefined tensor");
  return *const_cast<detail::Node*>(t.node());
}

[[noreturn]] void shape_fail(std::string_view op, Shape a, Shape b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << to_string(a) << " and " << to_string(b);
  throw DimensionError(os.str());
}

// Right-operand broadcast for binary elementwise ops.
struct Broadcast {
  std::size_t rows = 0, cols = 0;   // output
  std::size_t b_cols = 0;
  bool b_row = false;  // b varies along rows
  bool b_col = false;  // b varies along cols

  [[nodiscard]] std::size_t b_index(std::size_t i, std::size_t j) const {
    return (b_row ? i : 0) * b_cols + (b_col ? j : 0);
  }
};

Broadcast broadcast(std::string_view op, Shape a, Shape b) {
  const bool rows_ok = b.rows == a.rows || b.rows == 1;
  const bool cols_ok = b.cols == a.cols || b.cols == 1;
  if (!rows_ok || !cols_ok) shape_fail(op, a, b);
  return {a.rows, a.cols, b.cols, b.rows == a.rows && a.rows != 1, b.cols == a.cols && a.cols != 1};
}

template <typename Fwd, typename Dfda, typename Dfdb>
Tensor binary(Tape& tape, std::string_view op, const Tensor& a, const Tensor& b, Fwd fwd, Dfda dfda, Dfdb dfdb) {
  auto& na = node_of(a);
  auto& nb = node_of(b);
  const Broadcast bc = broadcast(op, na.shape, nb.shape);
  Tensor out = tape.make_output(na.shape, {&a, &b});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < bc.rows; ++i) {
    for (std::size_t j = 0; j < bc.cols; ++j) {
      const std::size_t k = i * bc.cols + j;
      no.value[k] = fwd(na.value[k], nb.value[bc.b_index(i, j)]);
    }
  }
  tape.record(op, {&a, &b}, out, [pa = &na, pb = &nb, po = &no, bc, dfda, dfdb] {
    const bool ga = pa->requires_grad;
    const bool gb = pb->requires_grad;
    if (ga) pa->ensure_grad();
    if (gb) pb->ensure_grad();
    for (std::size_t i = 0; i < bc.rows; ++i) {
      for (std::size_t j = 0; j < bc.cols; ++j) {
        const std::size_t k = i * bc.cols + j;
        const std::size_t kb = bc.b_index(i, j);
        const double g = po->grad[k];
        if (ga) pa->grad[k] += g * dfda(pa->value[k], pb->value[kb], po->value[k]);
        if (gb) pb->grad[kb] += g * dfdb(pa->value[k], pb->value[kb], po->value[k]);
      }
    }
  });
  return out;
}

// df(x, y) where y = f(x) is the output.
template <typename Fwd, typename Deriv>
Tensor unary(Tape& tape, std::string_view op, const Tensor& a, Fwd fwd, Deriv deriv) {
  auto& na = node_of(a);
  Tensor out = tape.make_output(na.shape, {&a});
  auto& no = node_of(out);
  const std::size_t n = na.shape.size();
  for (std::size_t k = 0; k < n; ++k) no.value[k] = fwd(na.value[k]);
  tape.record(op, {&a}, out, [pa = &na, po = &no, n, deriv] {
    auto& g = pa->ensure_grad();
    for (std::size_t k = 0; k < n; ++k) g[k] += po->grad[k] * deriv(pa->value[k], po->value[k]);
  });
  return out;
}

}  // namespace

std::string to_string(Shape shape) {
  return "[" + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) + "]";
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(shape, 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape.size(), value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.rows == 0 || shape.cols == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  if (values.size() != shape.size()) {
    throw DimensionError("tensor " + to_string(shape) + " given " + std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_values({1, 1}, {value}, requires_grad); }

Shape Tensor::shape() const { return node_of(*this).shape; }
std::span<const double> Tensor::values() const { return node_of(*this).value; }
std::span<double> Tensor::mutable_values() { return node_of(*this).value; }

double Tensor::at(std::size_t row, std::size_t col) const {
  const auto& n = node_of(*this);
  if (row >= n.shape.rows || col >= n.shape.cols) throw DimensionError("index out of range for " + to_string(n.shape));
  return n.value[row * n.shape.cols + col];
}

double& Tensor::at(std::size_t row, std::size_t col) {
  auto& n = node_of(*this);
  if (row >= n.shape.rows || col >= n.shape.cols) throw DimensionError("index out of range for " + to_string(n.shape));
  return n.value[row * n.shape.cols + col];
}

double Tensor::item() const {
  const auto& n = node_of(*this);
  if (n.shape.size() != 1) throw DimensionError("item() on non-scalar " + to_string(n.shape));
  return n.value[0];
}

bool Tensor::requires_grad() const { return node_of(*this).requires_grad; }
void Tensor::set_requires_grad(bool flag) {
  auto& n = node_of(*this);
  if (!n.is_leaf) throw ContractError("requires_grad can only be changed on leaf tensors");
  n.requires_grad = flag;
}
bool Tensor::is_leaf() const { return node_of(*this).is_leaf; }
bool Tensor::has_grad() const { return !node_of(*this).grad.empty(); }

std::span<const double> Tensor::grad() const { return node_of(*this).ensure_grad(); }
std::span<double> Tensor::mutable_grad() { return node_of(*this).ensure_grad(); }
void Tensor::zero_grad() {
  auto& n = node_of(*this);
  std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = node_of(*this);
  return from_values(n.shape, n.value, false);
}

Tensor Tensor::clone() const {
  const auto& n = node_of(*this);
  return from_values(n.shape, n.value, n.requires_grad);
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::make_output(Shape shape, std::initializer_list<const Tensor*> inputs) {
  bool rg = false;
  if (recording_) {
    for (const Tensor* t : inputs) rg = rg || node_of(*t).requires_grad;
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value.assign(shape.size(), 0.0);
  node->requires_grad = rg;
  node->is_leaf = false;
  return Tensor(std::move(node));
}

void Tape::record(std::string_view op, std::initializer_list<const Tensor*> inputs, const Tensor& output,
                  std::function<void()> backward_fn) {
  if (!recording_ || !output.requires_grad()) return;
  Record rec{op, {}, output.node_, std::move(backward_fn)};
  rec.inputs.reserve(inputs.size());
  for (const Tensor* t : inputs) rec.inputs.push_back(t->node_);
  records_.push_back(std::move(rec));
}

void Tape::record(std::string_view op, std::span<const Tensor> inputs, const Tensor& output,
                  std::function<void()> backward_fn) {
  if (!recording_ || !output.requires_grad()) return;
  Record rec{op, {}, output.node_, std::move(backward_fn)};
  rec.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) rec.inputs.push_back(t.node_);
  records_.push_back(std::move(rec));
}

void Tape::backward(const Tensor& loss) {
  if (records_.empty()) throw ContractError("backward on an empty tape");
  auto& nl = node_of(loss);
  if (nl.shape.size() != 1) throw ContractError("backward requires a scalar loss, got " + to_string(nl.shape));
  if (!nl.requires_grad) throw ContractError("backward on a loss that does not depend on any parameter");
  for (auto& rec : records_) {
    auto& g = rec.output->grad;
    if (g.size() == rec.output->value.size()) {
      std::fill(g.begin(), g.end(), 0.0);
    } else {
      g.assign(rec.output->value.size(), 0.0);
    }
  }
  if (nl.is_leaf) {
    nl.ensure_grad()[0] += 1.0;
    return;
  }
  nl.ensure_grad()[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward_fn();
}

bool Tape::references(const Tensor& tensor) const {
  const auto* node = tensor.node();
  for (const auto& rec : records_) {
    if (rec.output.get() == node) return true;
    for (const auto& in : rec.inputs)
      if (in.get() == node) return true;
  }
  return false;
}

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(records_.size());
  for (const auto& rec : records_) names.push_back(rec.op);
  return names;
}

// ---------------------------------------------------------------------------
// Operations

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  auto& na = node_of(a);
  auto& nb = node_of(b);
  if (na.shape.cols != nb.shape.rows) shape_fail("matmul", na.shape, nb.shape);
  const Shape os{na.shape.rows, nb.shape.cols};
  Tensor out = tape.make_output(os, {&a, &b});
  auto& no = node_of(out);
  mut_view(no.value, os).noalias() = view(na) * view(nb);
  tape.record("matmul", {&a, &b}, out, [pa = &na, pb = &nb, po = &no] {
    const auto dc = grad_view(*po);
    if (pa->requires_grad) mut_view(pa->ensure_grad(), pa->shape).noalias() += dc * view(*pb).transpose();
    if (pb->requires_grad) mut_view(pb->ensure_grad(), pb->shape).noalias() += view(*pa).transpose() * dc;
  });
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor minimum(Tape& tape, const Tensor& a, const Tensor& b) {
  // Ties route the gradient to the left operand.
  return binary(
      tape, "minimum", a, b, [](double x, double y) { return std::min(x, y); },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor neg(Tape& tape, const Tensor& a) {
  return unary(
      tape, "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary(
      tape, "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary(
      tape, "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(Tape& tape, const Tensor& a) {
  return unary(
      tape, "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(Tape& tape, const Tensor& a) {
  for (double v : node_of(a).value) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      tape, "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(Tape& tape, const Tensor& a) {
  return unary(
      tape, "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary(
      tape, "scale", a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double offset) {
  return unary(
      tape, "add_scalar", a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor clamp(Tape& tape, const Tensor& a, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  return unary(
      tape, "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor log1m_tanh_sq(Tape& tape, const Tensor& u) {
  const auto softplus = [](double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); };
  return unary(
      tape, "log1m_tanh_sq", u,
      [softplus](double x) { return 2.0 * (std::numbers::ln2 - x - softplus(-2.0 * x)); },
      [](double x, double) { return -2.0 * std::tanh(x); });
}

Tensor sum(Tape& tape, const Tensor& a) {
  auto& na = node_of(a);
  Tensor out = tape.make_output({1, 1}, {&a});
  auto& no = node_of(out);
  double s = 0.0;
  for (double v : na.value) s += v;
  no.value[0] = s;
  tape.record("sum", {&a}, out, [pa = &na, po = &no] {
    auto& g = pa->ensure_grad();
    const double go = po->grad[0];
    for (double& v : g) v += go;
  });
  return out;
}

Tensor mean(Tape& tape, const Tensor& a) {
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(node_of(a).shape.size()));
}

Tensor row_sum(Tape& tape, const Tensor& a) {
  auto& na = node_of(a);
  const auto [rows, cols] = na.shape;
  Tensor out = tape.make_output({rows, 1}, {&a});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += na.value[i * cols + j];
    no.value[i] = s;
  }
  tape.record("row_sum", {&a}, out, [pa = &na, po = &no, rows, cols] {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += po->grad[i];
  });
  return out;
}

Tensor softmax_rows(Tape& tape, const Tensor& a) {
  auto& na = node_of(a);
  const auto [rows, cols] = na.shape;
  Tensor out = tape.make_output(na.shape, {&a});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = na.value.data() + i * cols;
    double* y = no.value.data() + i * cols;
    const double m = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (y[j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  tape.record("softmax_rows", {&a}, out, [pa = &na, po = &no, rows, cols] {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = po->value.data() + i * cols;
      const double* gy = po->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += y[j] * gy[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += y[j] * (gy[j] - dot);
    }
  });
  return out;
}

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b) {
  auto& na = node_of(a);
  auto& nb = node_of(b);
  if (na.shape.rows != nb.shape.rows) shape_fail("concat_cols", na.shape, nb.shape);
  const std::size_t rows = na.shape.rows, ca = na.shape.cols, cb = nb.shape.cols;
  Tensor out = tape.make_output({rows, ca + cb}, {&a, &b});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(na.value.data() + i * ca, ca, no.value.data() + i * (ca + cb));
    std::copy_n(nb.value.data() + i * cb, cb, no.value.data() + i * (ca + cb) + ca);
  }
  tape.record("concat_cols", {&a, &b}, out, [pa = &na, pb = &nb, po = &no, rows, ca, cb] {
    for (std::size_t i = 0; i < rows; ++i) {
      const double* g = po->grad.data() + i * (ca + cb);
      if (pa->requires_grad) {
        auto& ga = pa->ensure_grad();
        for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] += g[j];
      }
      if (pb->requires_grad) {
        auto& gb = pb->ensure_grad();
        for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] += g[ca + j];
      }
    }
  });
  return out;
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end) {
  auto& na = node_of(a);
  if (begin >= end || end > na.shape.cols) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " +
                         to_string(na.shape));
  }
  const std::size_t rows = na.shape.rows, cols = na.shape.cols, w = end - begin;
  Tensor out = tape.make_output({rows, w}, {&a});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(na.value.data() + i * cols + begin, w, no.value.data() + i * w);
  tape.record("slice_cols", {&a}, out, [pa = &na, po = &no, rows, cols, begin, w] {
    auto& g = pa->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * cols + begin + j] += po->grad[i * w + j];
  });
  return out;
}

Tensor gather_rows(Tape& tape, const Tensor& src, std::span<const int> rows) {
  auto& ns = node_of(src);
  const std::size_t cols = ns.shape.cols;
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= ns.shape.rows) {
      throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range for " + to_string(ns.shape));
    }
  }
  Tensor out = tape.make_output({rows.size(), cols}, {&src});
  auto& no = node_of(out);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(ns.value.data() + static_cast<std::size_t>(rows[i]) * cols, cols, no.value.data() + i * cols);
  tape.record("gather_rows", {&src}, out, [ps = &ns, po = &no, idx = std::vector<int>(rows.begin(), rows.end()), cols] {
    auto& g = ps->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) g[static_cast<std::size_t>(idx[i]) * cols + j] += po->grad[i * cols + j];
  });
  return out;
}

Tensor routed_linear(Tape& tape, const Tensor& x, std::span<const int> routes, std::span<const Tensor> weights,
                     std::span<const Tensor> biases) {
  auto& nx = node_of(x);
  const std::size_t batch = nx.shape.rows, in = nx.shape.cols;
  if (routes.size() != batch) throw DimensionError("routed_linear: one route per row required");
  if (weights.empty() || weights.size() != biases.size()) throw ContractError("routed_linear: weights/biases mismatch");
  const std::size_t out_dim = weights.front().cols();
  for (std::size_t r = 0; r < weights.size(); ++r) {
    if (weights[r].shape() != Shape{in, out_dim}) shape_fail("routed_linear weight", nx.shape, weights[r].shape());
    if (biases[r].shape() != Shape{1, out_dim}) shape_fail("routed_linear bias", {1, out_dim}, biases[r].shape());
  }
  // Rows grouped by route, in ascending row order within a route.
  std::vector<std::vector<std::size_t>> groups(weights.size());
  for (std::size_t i = 0; i < batch; ++i) {
    const int r = routes[i];
    if (r < 0 || static_cast<std::size_t>(r) >= weights.size()) {
      throw TaskError("routed_linear: route " + std::to_string(r) + " out of range [0," +
                      std::to_string(weights.size()) + ")");
    }
    groups[static_cast<std::size_t>(r)].push_back(i);
  }

  bool any_rg = nx.requires_grad;
  for (std::size_t r = 0; r < weights.size(); ++r)
    any_rg = any_rg || (!groups[r].empty() && (weights[r].requires_grad() || biases[r].requires_grad()));
  Tensor out = tape.make_output({batch, out_dim}, {&x});
  auto& no = node_of(out);
  no.requires_grad = tape.recording() && any_rg;

  RowMatrix xs, ys;
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto& rows = groups[r];
    if (rows.empty()) continue;
    xs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(in));
    for (std::size_t k = 0; k < rows.size(); ++k)
      std::copy_n(nx.value.data() + rows[k] * in, in, xs.data() + k * in);
    const auto& nw = *weights[r].node();
    const auto& nbias = *biases[r].node();
    ys.noalias() = xs * view(nw);
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (std::size_t j = 0; j < out_dim; ++j)
        no.value[rows[k] * out_dim + j] = ys(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) + nbias.value[j];
  }

  // Only routes that were used become tape inputs.
  std::vector<Tensor> inputs{x};
  std::vector<detail::Node*> wn(weights.size(), nullptr), bn(weights.size(), nullptr);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    if (groups[r].empty()) continue;
    inputs.push_back(weights[r]);
    inputs.push_back(biases[r]);
    wn[r] = &node_of(weights[r]);
    bn[r] = &node_of(biases[r]);
  }
  tape.record("routed_linear", std::span<const Tensor>(inputs), out,
              [px = &nx, po = &no, groups = std::move(groups), wn, bn, in, out_dim] {
                RowMatrix xs, gs;
                for (std::size_t r = 0; r < groups.size(); ++r) {
                  const auto& rows = groups[r];
                  if (rows.empty()) continue;
                  const auto n = static_cast<Eigen::Index>(rows.size());
                  gs.resize(n, static_cast<Eigen::Index>(out_dim));
                  for (std::size_t k = 0; k < rows.size(); ++k)
                    std::copy_n(po->grad.data() + rows[k] * out_dim, out_dim, gs.data() + k * out_dim);
                  if (wn[r]->requires_grad) {
                    xs.resize(n, static_cast<Eigen::Index>(in));
                    for (std::size_t k = 0; k < rows.size(); ++k)
                      std::copy_n(px->value.data() + rows[k] * in, in, xs.data() + k * in);
                    mut_view(wn[r]->ensure_grad(), wn[r]->shape).noalias() += xs.transpose() * gs;
                  }
                  if (bn[r]->requires_grad) {
                    auto& gb = bn[r]->ensure_grad();
                    for (Eigen::Index k = 0; k < n; ++k)
                      for (std::size_t j = 0; j < out_dim; ++j) gb[j] += gs(k, static_cast<Eigen::Index>(j));
                  }
                  if (px->requires_grad) {
                    const RowMatrix gx = gs * view(*wn[r]).transpose();
                    auto& g = px->ensure_grad();
                    for (std::size_t k = 0; k < rows.size(); ++k)
                      for (std::size_t j = 0; j < in; ++j)
                        g[rows[k] * in + j] += gx(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
                  }
                }
              });
  return out;
}

}  // namespace ptsl::ad
