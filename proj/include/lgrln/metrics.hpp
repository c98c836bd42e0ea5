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

#include <span>
#include <vector>

#include "lgrln/error.hpp"
#include "lgrln/tensor.hpp"

namespace lgrln {

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Keyshot F1 of a predicted frame mask against one ground-truth mask. Empty
// prediction gives P = 0, empty ground truth gives R = 0, P = R = 0 gives 0.
F1Score f1(const std::vector<bool>& pred, const std::vector<bool>& gt);

struct F1Multi {
  double max = 0.0;
  double mean = 0.0;
};

// Per-annotator F1 against each row of a binary [m x n] label matrix.
F1Multi f1_multi(const std::vector<bool>& pred, const Tensor& labels);

// Raised when a correlation has a zero-variance argument.
class UndefinedCorrelation : public NumericError {
 public:
  using NumericError::NumericError;
};

// Tie-corrected Kendall tau-b, O(n log n).
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

}  // namespace lgrln
