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

#include "lgrln/postproc.hpp"

#include <cmath>
#include <limits>

#include "lgrln/error.hpp"

namespace lgrln {

std::vector<std::pair<std::size_t, std::size_t>> ShotSegmentation::shots() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t cp : change_points) {
    out.emplace_back(begin, cp);
    begin = cp;
  }
  out.emplace_back(begin, n_frames);
  return out;
}

void ShotSegmentation::validate() const {
  if (n_frames == 0) throw ContractError("segmentation of an empty video");
  std::size_t prev = 0;
  for (std::size_t cp : change_points) {
    if (cp <= prev || cp >= n_frames) {
      throw ContractError("change point " + std::to_string(cp) +
                          " breaks strict ordering inside (0, " + std::to_string(n_frames) + ")");
    }
    prev = cp;
  }
}

Tensor kernel_matrix(const Tensor& features, const KernelSpec& kernel) {
  if (features.rank() != 2) throw DimensionError("features must be n x D, got " + shape_string(features.shape()));
  const Tensor gram = lgrln::gram(features);
  if (kernel.kind == KernelKind::kLinear) return gram;
  const std::size_t n = features.extent(0);
  const double gamma =
      kernel.rbf_gamma > 0.0 ? kernel.rbf_gamma : 1.0 / static_cast<double>(std::max<std::size_t>(1, features.extent(1)));
  Tensor out = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dist2 = std::max(0.0, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));
      out(i, j) = std::exp(-gamma * dist2);
    }
  }
  return out;
}

double mean_diagonal(const Tensor& gram) {
  const std::size_t n = gram.extent(0);
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += gram(i, i);
  return s / static_cast<double>(n);
}

KtsTable kts_dynamic_program(const Tensor& gram, std::size_t max_changes) {
  if (gram.rank() != 2 || gram.extent(0) != gram.extent(1)) {
    throw DimensionError("Gram matrix must be square, got " + shape_string(gram.shape()));
  }
  const std::size_t n = gram.extent(0);
  if (n == 0) throw ContractError("segmentation of an empty video");
  if (max_changes >= n) {
    throw ConfigError("max_changes " + std::to_string(max_changes) + " must be below n_frames " +
                      std::to_string(n));
  }

  // cum(i, j) = sum of K over rows [0, i) and columns [0, j).
  const std::size_t w = n + 1;
  std::vector<double> cum(w * w, 0.0);
  std::vector<double> diag(w, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row_run = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row_run += gram(i, j);
      cum[(i + 1) * w + (j + 1)] = cum[i * w + (j + 1)] + row_run;
    }
    diag[i + 1] = diag[i] + gram(i, i);
  }
  // Column-major copy so that cum(s, e) for fixed e is contiguous in s.
  std::vector<double> cum_t(w * w);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < w; ++j) cum_t[j * w + i] = cum[i * w + j];

  const double inf = std::numeric_limits<double>::infinity();
  // cost[m * w + e]: best scatter of frames [0, e) cut by m change points.
  std::vector<double> cost((max_changes + 1) * w, inf);
  std::vector<std::size_t> arg((max_changes + 1) * w, 0);
  std::vector<double> seg(w);  // seg[s]: scatter of frames [s, e)
  for (std::size_t e = 1; e <= n; ++e) {
    const double* row_e = &cum[e * w];
    const double* col_e = &cum_t[e * w];
    const double corner = row_e[e];
    for (std::size_t s = 0; s < e; ++s) {
      const double block = corner - col_e[s] - row_e[s] + cum[s * w + s];
      seg[s] = (diag[e] - diag[s]) - block / static_cast<double>(e - s);
    }
    cost[e] = seg[0];
    const std::size_t top = std::min(max_changes, e - 1);
    for (std::size_t m = 1; m <= top; ++m) {
      const double* prev = &cost[(m - 1) * w];
      // Branch-free min over four lanes, then the first index attaining it.
      double lane[4] = {inf, inf, inf, inf};
      std::size_t s = m;
      for (; s + 4 <= e; s += 4)
        for (std::size_t k = 0; k < 4; ++k) lane[k] = std::min(lane[k], prev[s + k] + seg[s + k]);
      for (; s < e; ++s) lane[0] = std::min(lane[0], prev[s] + seg[s]);
      const double best = std::min(std::min(lane[0], lane[1]), std::min(lane[2], lane[3]));
      std::size_t best_s = m;
      while (best_s + 1 < e && prev[best_s] + seg[best_s] != best) ++best_s;
      cost[m * w + e] = best;
      arg[m * w + e] = best_s;
    }
  }

  KtsTable table;
  table.scatter.resize(max_changes + 1);
  table.change_points.resize(max_changes + 1);
  for (std::size_t m = 0; m <= max_changes; ++m) {
    table.scatter[m] = cost[m * w + n];
    std::vector<std::size_t> cps(m);
    std::size_t e = n;
    for (std::size_t k = m; k > 0; --k) {
      e = arg[k * w + e];
      cps[k - 1] = e;
    }
    table.change_points[m] = std::move(cps);
  }
  return table;
}

ShotSegmentation kts_select(const KtsTable& table, std::size_t n_frames, double penalty) {
  std::size_t best_m = 0;
  double best = table.scatter.at(0);
  const double n = static_cast<double>(n_frames);
  for (std::size_t m = 1; m < table.scatter.size(); ++m) {
    const double md = static_cast<double>(m);
    const double score = table.scatter[m] + penalty * md * (std::log(n / md) + 1.0);
    if (score < best) {
      best = score;
      best_m = m;
    }
  }
  return ShotSegmentation{table.change_points[best_m], n_frames};
}

ShotSegmentation kts_segment(const Tensor& features, std::size_t max_changes, double penalty_coeff,
                             const KernelSpec& kernel) {
  if (features.rank() != 2 || features.extent(0) == 0) {
    throw ContractError("kts needs at least one frame, got " + shape_string(features.shape()));
  }
  const std::size_t n = features.extent(0);
  if (max_changes >= n) {
    throw ConfigError("max_changes " + std::to_string(max_changes) + " must be below n_frames " +
                      std::to_string(n));
  }
  const Tensor gram = kernel_matrix(features, kernel);
  return kts_select(kts_dynamic_program(gram, max_changes), n, penalty_coeff);
}

KnapsackResult knapsack_select(std::span<const double> values, std::span<const std::size_t> weights,
                               std::size_t capacity) {
  if (values.size() != weights.size()) {
    throw DimensionError(std::to_string(values.size()) + " values vs " +
                         std::to_string(weights.size()) + " weights");
  }
  const std::size_t n = values.size();
  for (std::size_t w : weights) {
    if (w == 0) throw ContractError("knapsack item weights must be positive");
  }
  const std::size_t cols = capacity + 1;
  // best[i][c]: optimum over items [i, n) with capacity c.
  std::vector<double> best((n + 1) * cols, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double* next = &best[(i + 1) * cols];
    double* cur = &best[i * cols];
    for (std::size_t c = 0; c <= capacity; ++c) {
      double v = next[c];
      if (weights[i] <= c) v = std::max(v, values[i] + next[c - weights[i]]);
      cur[c] = v;
    }
  }

  KnapsackResult out;
  std::size_t c = capacity;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = best[i * cols + c];
    // The empty continuation is the smallest sequence once nothing is left to gain.
    if (target == 0.0) break;
    const double* next = &best[(i + 1) * cols];
    if (weights[i] <= c && values[i] + next[c - weights[i]] == target) {
      out.selected.push_back(i);
      out.value += values[i];
      out.weight += weights[i];
      c -= weights[i];
    }
  }
  return out;
}

SummarySelection summarize(std::span<const double> probs, const ShotSegmentation& seg,
                           double budget_ratio) {
  if (!(budget_ratio > 0.0 && budget_ratio <= 1.0)) {
    throw ConfigError("budget_ratio must lie in (0, 1]");
  }
  if (probs.size() != seg.n_frames) {
    throw DimensionError(std::to_string(probs.size()) + " scores for a segmentation of " +
                         std::to_string(seg.n_frames) + " frames");
  }
  seg.validate();
  SummarySelection out;
  for (const auto& [b, e] : seg.shots()) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += probs[i];
    out.shot_scores.push_back(s / static_cast<double>(e - b));
    out.shot_lengths.push_back(e - b);
  }
  out.budget = static_cast<std::size_t>(std::floor(budget_ratio * static_cast<double>(seg.n_frames)));
  const KnapsackResult pick = knapsack_select(out.shot_scores, out.shot_lengths, out.budget);
  out.selected.assign(out.shot_scores.size(), false);
  out.frame_mask.assign(seg.n_frames, false);
  const auto ranges = seg.shots();
  for (std::size_t s : pick.selected) {
    out.selected[s] = true;
    for (std::size_t i = ranges[s].first; i < ranges[s].second; ++i) out.frame_mask[i] = true;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> mask_runs(const std::vector<bool>& mask) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < mask.size();) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.emplace_back(i, j - i);
    i = j;
  }
  return runs;
}

}  // namespace lgrln
