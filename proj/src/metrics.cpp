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

#include "lgrln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace lgrln {

namespace {

void require_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("correlation inputs of length " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  if (x.size() < 2) throw ContractError("correlation needs at least two observations");
}

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Counts inversions of v[lo, hi) while merge-sorting it.
std::int64_t sort_count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                   std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = sort_count_inversions(v, buf, lo, mid) + sort_count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

F1Score f1(const std::vector<bool>& pred, const std::vector<bool>& gt) {
  if (pred.size() != gt.size()) {
    throw DimensionError("prediction of " + std::to_string(pred.size()) + " frames vs ground truth of " +
                         std::to_string(gt.size()));
  }
  std::size_t overlap = 0, n_pred = 0, n_gt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    n_pred += pred[i];
    n_gt += gt[i];
    overlap += pred[i] && gt[i];
  }
  F1Score s;
  s.precision = n_pred ? static_cast<double>(overlap) / static_cast<double>(n_pred) : 0.0;
  s.recall = n_gt ? static_cast<double>(overlap) / static_cast<double>(n_gt) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

F1Multi f1_multi(const std::vector<bool>& pred, const Tensor& labels) {
  if (labels.rank() != 2 || labels.extent(0) == 0) {
    throw ContractError("f1_multi needs at least one annotation");
  }
  F1Multi out;
  out.max = -1.0;
  double total = 0.0;
  for (std::size_t k = 0; k < labels.extent(0); ++k) {
    const auto row = labels.row(k);
    std::vector<bool> gt(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) gt[i] = row[i] != 0.0;
    const double v = f1(pred, gt).f1;
    out.max = std::max(out.max, v);
    total += v;
  }
  out.mean = total / static_cast<double>(labels.extent(0));
  return out;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t n0 = tie_pairs(static_cast<std::int64_t>(n));
  std::int64_t ties_x = 0, ties_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    ties_x += tie_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      ties_xy += tie_pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t discordant = sort_count_inversions(ys, buf, 0, n);

  std::int64_t ties_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    ties_y += tie_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t dx = n0 - ties_x, dy = n0 - ties_y;
  if (dx == 0 || dy == 0) throw UndefinedCorrelation("kendall tau undefined for a constant input");
  const std::int64_t numer = n0 - ties_x - ties_y + ties_xy - 2 * discordant;
  return static_cast<double>(numer) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("spearman rho undefined for a constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lgrln
