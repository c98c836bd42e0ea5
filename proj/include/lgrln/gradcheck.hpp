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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lgrln/autodiff.hpp"

namespace lgrln {

struct GradCheckReport {
  double max_error = 0.0;  // max |analytic - fd| / max(1, |fd|)
  std::size_t entries = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tolerance) const { return max_error < tolerance; }
};

// Builds a scalar loss on `tape` from leaves bound to the given inputs.
using ScalarGraph = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

// Compares reverse-mode gradients of `graph` with central finite differences
// over every entry of every input.
GradCheckReport check_gradients(const ScalarGraph& graph, const std::vector<Tensor>& inputs,
                                double step = 1e-5);

// Scalar sum(out * weights); turns a tensor-valued op into a scalar probe.
Var weighted_sum(const Var& out, const Tensor& weights);

}  // namespace lgrln
