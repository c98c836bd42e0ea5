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

#include "lgrln/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace lgrln {

namespace {

double evaluate(const ScalarGraph& graph, const std::vector<Tensor>& inputs) {
  Tape tape;
  tape.set_grad_enabled(false);
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  return graph(tape, vars).value().item();
}

}  // namespace

GradCheckReport check_gradients(const ScalarGraph& graph, const std::vector<Tensor>& inputs,
                                double step) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(tape.parameter(t));
  const Var loss = graph(tape, vars);
  const GradMap grads = tape.backward(loss);

  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& analytic = grads.at(vars[k]);
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double saved = probe[k][i];
      probe[k][i] = saved + step;
      const double up = evaluate(graph, probe);
      probe[k][i] = saved - step;
      const double down = evaluate(graph, probe);
      probe[k][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++report.entries;
      if (err > report.max_error || !std::isfinite(err)) {
        report.max_error = std::isfinite(err) ? err : HUGE_VAL;
        report.worst_input = k;
        report.worst_index = i;
        report.worst_analytic = analytic[i];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

Var weighted_sum(const Var& out, const Tensor& weights) {
  return sum(mask_mul(out, weights));
}

}  // namespace lgrln
