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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lgrln {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
///
/// A rank-0 tensor (empty shape) holds exactly one value. Tensors are plain
/// values: copying copies the payload.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  // Matrix views; rank-1 tensors are treated as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : rows_other(); }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : cols_other(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  // Value of a rank-0 or single-element tensor.
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag) { requires_grad_ = flag; }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_other() const;
  std::size_t cols_other() const;

  Shape shape_;
  std::vector<double> data_;
  bool requires_grad_ = false;
};

// Dense kernels over plain tensors. They do not record gradients; the
// differentiable counterparts live in autodiff.hpp.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// a * a^T, computed as a symmetric rank update.
Tensor gram(const Tensor& a);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Softmax of a rank-1 tensor, or of every row of a rank-2 tensor.
Tensor softmax(const Tensor& x);

double gelu(double x);
double gelu_derivative(double x);
double sigmoid(double x);

inline constexpr double kCosineNormEpsilon = 1e-12;

// Cosine similarity; 0 when either norm is below kCosineNormEpsilon.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(const Tensor& u, const Tensor& v);

}  // namespace lgrln
