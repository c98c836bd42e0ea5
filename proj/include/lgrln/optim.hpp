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
#include <cstdint>
#include <span>
#include <vector>

#include "lgrln/tensor.hpp"

namespace lgrln {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // When false the second-moment denominator is dropped, leaving
  // (bias-corrected) momentum SGD with decoupled decay.
  bool adaptive = true;

  void validate() const;
};

/// AdamW with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg);

  // `params` and `grads` are aligned; moment buffers are created on the
  // first call and must keep matching shapes afterwards.
  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

  std::uint64_t steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamWConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_ = 0;
};

}  // namespace lgrln
