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

#include "lgrln/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap as_matrix(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ContractError("operands are recorded on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.tape();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void axpy(Tensor& dst, const Tensor& src, double alpha = 1.0) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("value() on an unbound Var");
  return tape_->value(id_);
}

const Tensor& GradMap::at(const Var& v) const {
  auto it = grads_.find(v.id());
  if (it == grads_.end()) {
    throw ContractError("no gradient recorded for node " + std::to_string(v.id()) +
                        " (not a requires_grad leaf)");
  }
  return it->second;
}

void Tape::check_writable() const {
  if (consumed_) {
    throw StateError("tape was consumed by backward(); clear() it before recording again");
  }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  check_writable();
  value.set_requires_grad(requires_grad);
  Node node;
  node.value = std::move(value);
  node.is_leaf = true;
  node.needs_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, Backprop backprop) {
  check_writable();
  Node node;
  node.needs_grad =
      grad_enabled_ && std::any_of(inputs.begin(), inputs.end(),
                                   [&](std::size_t id) { return nodes_.at(id).needs_grad; });
  node.value = std::move(value);
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Tensor& g = grads_.at(id);
  if (g.shape() != nodes_[id].value.shape() || g.numel() != nodes_[id].value.numel()) {
    g = Tensor::zeros(nodes_[id].value.shape());
  }
  return g;
}

GradMap Tape::backward(const Var& loss) {
  if (consumed_) {
    throw StateError("backward() called twice on the same recording");
  }
  if (loss.tape() != this) throw ContractError("loss was not recorded on this tape");
  if (loss.value().numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  std::vector<bool> touched(nodes_.size(), false);
  grad(loss.id()) = Tensor::filled(loss.shape(), 1.0);
  touched[loss.id()] = true;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!touched[i] || !node.backprop) continue;
    node.backprop(*this, grads_[i]);
    for (std::size_t in : node.inputs) touched[in] = true;
  }

  GradMap out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (!node.is_leaf || !node.needs_grad) continue;
    if (touched[i] && grads_[i].shape() == node.value.shape() &&
        grads_[i].numel() == node.value.numel()) {
      out.grads_.emplace(i, std::move(grads_[i]));
    } else {
      out.grads_.emplace(i, Tensor::zeros(node.value.shape()));
    }
  }
  grads_.clear();
  consumed_ = true;
  return out;
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
  consumed_ = false;
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  axpy(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    if (tp.needs_grad(ia)) axpy(tp.grad(ia), g);
    if (tp.needs_grad(ib)) axpy(tp.grad(ib), g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  axpy(out, b.value(), -1.0);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    if (tp.needs_grad(ia)) axpy(tp.grad(ia), g);
    if (tp.needs_grad(ib)) axpy(tp.grad(ib), g, -1.0);
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const auto av = tp.value(ia).data();
    const auto bv = tp.value(ib).data();
    const auto gd = g.data();
    if (tp.needs_grad(ia)) {
      auto d = tp.grad(ia).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * bv[i];
    }
    if (tp.needs_grad(ib)) {
      auto d = tp.grad(ib).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * av[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia},
                  [ia, factor](Tape& tp, const Tensor& g) { axpy(tp.grad(ia), g, factor); });
}

Var add_row(const Var& x, const Var& bias) {
  Tape& t = same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || bv.rank() != 1 || bv.extent(0) != xv.extent(1)) {
    throw DimensionError("add_row shape mismatch: " + shape_string(xv.shape()) + " + " +
                         shape_string(bv.shape()));
  }
  Tensor out = xv;
  out.set_requires_grad(false);
  const std::size_t n = xv.extent(0), d = xv.extent(1);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out(r, c) += bv[c];
  const std::size_t ix = x.id(), ib = bias.id();
  return t.record(std::move(out), {ix, ib}, [ix, ib, n, d](Tape& tp, const Tensor& g) {
    if (tp.needs_grad(ix)) axpy(tp.grad(ix), g);
    if (tp.needs_grad(ib)) {
      Tensor& gb = tp.grad(ib);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  Tensor out = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    if (g.numel() == 0) return;
    const auto gm = as_matrix(g);
    if (tp.needs_grad(ia)) {
      const Tensor& bv = tp.value(ib);
      if (bv.numel()) as_matrix(tp.grad(ia)).noalias() += gm * as_matrix(bv).transpose();
    }
    if (tp.needs_grad(ib)) {
      const Tensor& av = tp.value(ia);
      if (av.numel()) as_matrix(tp.grad(ib)).noalias() += as_matrix(av).transpose() * gm;
    }
  });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  Tensor out = transpose(a.value());
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& tp, const Tensor& g) {
    Tensor& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.extent(0); ++i)
      for (std::size_t j = 0; j < g.extent(1); ++j) ga(j, i) += g(i, j);
  });
}

Var linear(const Var& x, const Var& w, const Var& b) { return add_row(matmul(x, w), b); }

Var gelu(const Var& x) {
  Tape& t = tape_of(x);
  Tensor out = gelu(x.value());
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix](Tape& tp, const Tensor& g) {
    const auto xv = tp.value(ix).data();
    auto d = tp.grad(ix).data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * gelu_derivative(xv[i]);
  });
}

Var sigmoid(const Var& x) {
  Tape& t = tape_of(x);
  Tensor out = sigmoid(x.value());
  const std::size_t ix = x.id();
  const std::size_t self = t.size();
  return t.record(std::move(out), {ix}, [ix, self](Tape& tp, const Tensor& g) {
    const auto y = tp.value(self).data();
    auto d = tp.grad(ix).data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax_rows(const Var& x) {
  Tape& t = tape_of(x);
  Tensor out = softmax(x.value());
  const std::size_t ix = x.id();
  const std::size_t self = t.size();
  return t.record(std::move(out), {ix}, [ix, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    Tensor& gx = tp.grad(ix);
    if (y.numel() == 0) return;
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto yr = y.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
      auto dr = gx.row(r);
      for (std::size_t c = 0; c < yr.size(); ++c) dr[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var mask_mul(const Var& x, const Tensor& mask) {
  Tape& t = tape_of(x);
  if (mask.shape() != x.shape()) {
    throw DimensionError("mask shape " + shape_string(mask.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  Tensor out = x.value();
  out.set_requires_grad(false);
  auto od = out.data();
  const auto md = mask.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= md[i];
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix, mask](Tape& tp, const Tensor& g) {
    auto d = tp.grad(ix).data();
    const auto gd = g.data();
    const auto md = mask.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * md[i];
  });
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t ix = x.id();
  return t.record(Tensor::scalar(total), {ix}, [ix](Tape& tp, const Tensor& g) {
    const double s = g.item();
    for (double& v : tp.grad(ix).data()) v += s;
  });
}

Var reshape(const Var& x, Shape shape) {
  Tape& t = tape_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  out.set_requires_grad(false);
  const std::size_t ix = x.id();
  return t.record(std::move(out), {ix}, [ix](Tape& tp, const Tensor& g) {
    auto d = tp.grad(ix).data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i];
  });
}

Var gather_rows(const Var& table, std::span<const std::size_t> indices) {
  Tape& t = tape_of(table);
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("gather_rows needs a matrix, got " + shape_string(tv.shape()));
  const std::size_t d = tv.extent(1);
  Tensor out = Tensor::zeros({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tv.extent(0)) {
      throw CapacityError("row index " + std::to_string(indices[i]) + " outside table of " +
                          std::to_string(tv.extent(0)) + " rows");
    }
    std::copy_n(tv.row(indices[i]).begin(), d, out.row(i).begin());
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t it = table.id();
  return t.record(std::move(out), {it}, [it, idx = std::move(idx)](Tape& tp, const Tensor& g) {
    Tensor& gt = tp.grad(it);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = gt.row(idx[i]);
      const auto src = g.row(i);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Var sparse_mix(const Var& h, const SparseRows& a) {
  Tape& t = tape_of(h);
  const Tensor& hv = h.value();
  if (hv.rank() != 2 || a.n_cols != hv.extent(0)) {
    throw DimensionError("sparse_mix: operator with " + std::to_string(a.n_cols) +
                         " columns applied to " + shape_string(hv.shape()));
  }
  const std::size_t d = hv.extent(1);
  Tensor out = Tensor::zeros({a.rows.size(), d});
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    auto dst = out.row(i);
    for (const auto& [j, w] : a.rows[i]) {
      const auto src = hv.row(j);
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
    }
  }
  const std::size_t ih = h.id();
  return t.record(std::move(out), {ih}, [ih, a](Tape& tp, const Tensor& g) {
    Tensor& gh = tp.grad(ih);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const auto src = g.row(i);
      for (const auto& [j, w] : a.rows[i]) {
        auto dst = gh.row(j);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
      }
    }
  });
}

}  // namespace lgrln
