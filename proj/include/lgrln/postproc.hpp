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
#include <span>
#include <utility>
#include <vector>

#include "lgrln/tensor.hpp"

namespace lgrln {

/// Shot boundaries of a video. Change points are the exclusive starts of
/// every shot after the first.
struct ShotSegmentation {
  std::vector<std::size_t> change_points;
  std::size_t n_frames = 0;

  std::size_t n_shots() const { return change_points.size() + 1; }
  // [begin, end) frame ranges, in order.
  std::vector<std::pair<std::size_t, std::size_t>> shots() const;
  // Change points strictly increasing and inside (0, n_frames).
  void validate() const;
};

enum class KernelKind { kLinear, kRbf };

struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  double rbf_gamma = 0.0;  // exp(-gamma |x - y|^2); 0 means 1 / feature width
};

Tensor kernel_matrix(const Tensor& features, const KernelSpec& kernel = {});
double mean_diagonal(const Tensor& gram);

/// Minimal within-segment scatter for every change-point count.
struct KtsTable {
  std::vector<double> scatter;                          // index m = number of changes
  std::vector<std::vector<std::size_t>> change_points;  // argmin placement for each m
};

// Scatter of [begin, end): sum_i K(i,i) - sum_{i,j} K(i,j) / (end - begin),
// with block sums read from 2-D cumulative sums of the Gram matrix.
KtsTable kts_dynamic_program(const Tensor& gram, std::size_t max_changes);

// Change-point count m minimizing scatter(m) + penalty * m * (log(n/m) + 1),
// where m = 0 carries no penalty.
ShotSegmentation kts_select(const KtsTable& table, std::size_t n_frames, double penalty);

ShotSegmentation kts_segment(const Tensor& features, std::size_t max_changes, double penalty_coeff,
                             const KernelSpec& kernel = {});

struct KnapsackResult {
  std::vector<std::size_t> selected;  // ascending item indices
  double value = 0.0;
  std::size_t weight = 0;
};

// Exact 0/1 knapsack by dynamic programming over capacity. Among optimal
// sets the lexicographically smallest index sequence is returned.
KnapsackResult knapsack_select(std::span<const double> values, std::span<const std::size_t> weights,
                               std::size_t capacity);

struct SummarySelection {
  std::vector<double> shot_scores;
  std::vector<std::size_t> shot_lengths;
  std::vector<bool> selected;
  std::vector<bool> frame_mask;
  std::size_t budget = 0;
};

// Shot score = mean probability over the shot; budget = floor(ratio * n).
SummarySelection summarize(std::span<const double> probs, const ShotSegmentation& seg,
                           double budget_ratio);

// (start, length) runs of set frames.
std::vector<std::pair<std::size_t, std::size_t>> mask_runs(const std::vector<bool>& mask);

}  // namespace lgrln
