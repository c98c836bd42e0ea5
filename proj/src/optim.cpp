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

#include "lgrln/optim.hpp"

#include <cmath>

#include "lgrln/error.hpp"

namespace lgrln {

void AdamWConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be positive");
}

AdamW::AdamW(AdamWConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void AdamW::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("adamw: " + std::to_string(params.size()) + " parameters vs " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Tensor::zeros(p->shape()));
      v_.push_back(Tensor::zeros(p->shape()));
    }
  }
  if (m_.size() != params.size()) throw StateError("adamw: parameter list changed between steps");

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  const double lr = cfg_.learning_rate;

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    if (g.shape() != p.shape() || m_[k].shape() != p.shape()) {
      throw DimensionError("adamw: gradient " + shape_string(g.shape()) + " for parameter " +
                           shape_string(p.shape()));
    }
    auto pd = p.data();
    const auto gd = g.data();
    auto md = m_[k].data();
    auto vd = v_[k].data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = cfg_.beta1 * md[i] + (1.0 - cfg_.beta1) * gd[i];
      vd[i] = cfg_.beta2 * vd[i] + (1.0 - cfg_.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / bc1;
      const double direction = cfg_.adaptive ? m_hat / (std::sqrt(vd[i] / bc2) + cfg_.eps) : m_hat;
      pd[i] -= lr * (direction + cfg_.weight_decay * pd[i]);
    }
  }
}

}  // namespace lgrln
