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

#include "lgrln/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

constexpr double kSqrt2OverPi = 0.79788456080286535587989211986876;
constexpr double kGeluCubic = 0.044715;

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
  if (shape_numel(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows_other() const {
  if (rank() == 1) return 1;
  throw DimensionError("rows() on tensor of shape " + shape_string(shape_));
}

std::size_t Tensor::cols_other() const {
  if (rank() == 1) return shape_[0];
  throw DimensionError("cols() on tensor of shape " + shape_string(shape_));
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out(std::move(shape), data_);
  out.requires_grad_ = requires_grad_;
  return out;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul shape mismatch: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  Tensor out = Tensor::zeros({m, n});
  if (m == 0 || n == 0 || k == 0) return out;
  ConstMap am(a.data().data(), m, k);
  ConstMap bm(b.data().data(), k, n);
  MutMap om(out.data().data(), m, n);
  om.noalias() = am * bm;
  return out;
}

Tensor gram(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("gram of " + shape_string(a.shape()));
  const std::size_t n = a.extent(0), k = a.extent(1);
  Tensor out = Tensor::zeros({n, n});
  if (n == 0 || k == 0) return out;
  ConstMap am(a.data().data(), n, k);
  MutMap om(out.data().data(), n, n);
  om.selfadjointView<Eigen::Lower>().rankUpdate(am);
  om.triangularView<Eigen::StrictlyUpper>() = om.transpose();
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose of " + shape_string(a.shape()));
  const std::size_t r = a.extent(0), c = a.extent(1);
  Tensor out = Tensor::zeros({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

// 0.5 * (1 + tanh(u)) == 1 / (1 + exp(-2u)); exp is much cheaper than tanh.
double gelu(double x) {
  const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return x / (1.0 + std::exp(-2.0 * inner));
}

double gelu_derivative(double x) {
  const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double s = 1.0 / (1.0 + std::exp(-2.0 * inner));
  const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return s + 2.0 * x * s * (1.0 - s) * dinner;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  out.set_requires_grad(false);
  for (double& v : out.data()) v = gelu(v);
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  out.set_requires_grad(false);
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw DimensionError("softmax expects rank 1 or 2, got " + shape_string(x.shape()));
  }
  Tensor out = x;
  out.set_requires_grad(false);
  if (x.numel() == 0) return out;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw DimensionError("cosine extent mismatch: " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < kCosineNormEpsilon || nv < kCosineNormEpsilon) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

double cosine(const Tensor& u, const Tensor& v) {
  if (u.shape() != v.shape()) {
    throw DimensionError("cosine extent mismatch: " + shape_string(u.shape()) + " vs " +
                         shape_string(v.shape()));
  }
  return cosine(u.data(), v.data());
}

}  // namespace lgrln
