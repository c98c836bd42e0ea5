// Copyright 2026 The lgrln Authors
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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lgrln/tensor.hpp"

namespace lgrln {

class Tape;

/// Handle to a value recorded on a Tape.
///
/// Vars are cheap to copy and only meaningful while their tape is alive and
/// has not been cleared.
class Var {
 public:
  Var() = default;

  // The reference is invalidated when more nodes are recorded on the tape.
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradients of a loss with respect to every requires_grad leaf of a tape.
class GradMap {
 public:
  const Tensor& at(const Var& v) const;
  bool contains(const Var& v) const { return grads_.count(v.id()) != 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

/// Reverse-mode recording of one forward pass.
///
/// Operations are appended in execution order, which is a topological order
/// of the computation graph. backward() walks the records once in reverse and
/// then marks the tape consumed; it must be cleared before reuse.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var parameter(Tensor value) { return leaf(std::move(value), true); }

  // Appends an operation result. `backprop` is dropped when no input needs a
  // gradient, and also when gradient recording is disabled.
  Var record(Tensor value, std::vector<std::size_t> inputs, Backprop backprop);

  GradMap backward(const Var& loss);

  void clear();
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

  // Inference mode: values are still recorded but no closures are kept.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }

  // Gradient accumulator for node `id`, zero-initialized on first use. Only
  // valid inside a Backprop callback.
  Tensor& grad(std::size_t id);

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    bool is_leaf = false;
    bool needs_grad = false;
  };

  void check_writable() const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool consumed_ = false;
  bool grad_enabled_ = true;
};

// Differentiable operations. All inputs must live on the same tape.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
// x[n x d] + bias[d], broadcast over rows.
Var add_row(const Var& x, const Var& bias);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// x * w + b for x[n x in], w[in x out], b[out].
Var linear(const Var& x, const Var& w, const Var& b);
Var gelu(const Var& x);
Var sigmoid(const Var& x);
Var softmax_rows(const Var& x);
// Elementwise product with a constant tensor (dropout masks).
Var mask_mul(const Var& x, const Tensor& mask);
Var sum(const Var& x);
Var reshape(const Var& x, Shape shape);
// Rows of `table` selected by `indices`; gradients scatter-add back.
Var gather_rows(const Var& table, std::span<const std::size_t> indices);

/// Row-sparse matrix with constant coefficients.
struct SparseRows {
  std::size_t n_cols = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
};

// out = A * h for a constant sparse A; gradient flows to h only.
Var sparse_mix(const Var& h, const SparseRows& a);

}  // namespace lgrln
