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

#include "lgrln/emloss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

void require_frames(std::span<const double> p, const AnnotationSet& annotations) {
  if (annotations.labels.rank() != 2 || p.size() != annotations.frames()) {
    throw DimensionError("probabilities for " + std::to_string(p.size()) +
                         " frames vs annotations " + shape_string(annotations.labels.shape()));
  }
}

bool inside_clamp(double p) { return p > kProbabilityClamp && p < 1.0 - kProbabilityClamp; }

// Cross-entropy against one soft target vector, with its gradient in p.
Var soft_target_bce(const Var& p, std::vector<double> target) {
  const auto pv = p.value().data();
  if (pv.size() != target.size()) {
    throw DimensionError("target length " + std::to_string(target.size()) + " vs " +
                         std::to_string(pv.size()) + " probabilities");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double c = clamp_probability(pv[i]);
    loss -= target[i] * std::log(c) + (1.0 - target[i]) * std::log(1.0 - c);
  }
  const std::size_t ip = p.id();
  return p.tape()->record(Tensor::scalar(loss), {ip},
                          [ip, target = std::move(target)](Tape& tp, const Tensor& g) {
                            const auto pv = tp.value(ip).data();
                            auto d = tp.grad(ip).data();
                            const double s = g.item();
                            for (std::size_t i = 0; i < d.size(); ++i) {
                              if (!inside_clamp(pv[i])) continue;
                              d[i] -= s * (target[i] / pv[i] - (1.0 - target[i]) / (1.0 - pv[i]));
                            }
                          });
}

}  // namespace

void AnnotationSet::validate(std::size_t n_frames) const {
  if (labels.rank() != 2 || labels.extent(0) == 0) {
    throw DimensionError("annotations must be m x n with m >= 1, got " +
                         shape_string(labels.shape()));
  }
  if (labels.extent(1) != n_frames) {
    throw DimensionError("annotations cover " + std::to_string(labels.extent(1)) +
                         " frames, video has " + std::to_string(n_frames));
  }
  for (double v : labels.data()) {
    if (v != 0.0 && v != 1.0) {
      throw ContractError("annotation value " + std::to_string(v) + " is not binary");
    }
  }
  if (importance && importance->shape() != labels.shape()) {
    throw DimensionError("importance shape " + shape_string(importance->shape()) +
                         " differs from labels " + shape_string(labels.shape()));
  }
}

void BceConfig::validate(std::size_t n_annotators) const {
  if (!(0.0 <= a && a < b && b < 1.0)) {
    throw ConfigError("loss weights need 0 <= a < b < 1");
  }
  if (subset_size < 1 || subset_size > n_annotators) {
    throw ConfigError("loss.subset_size " + std::to_string(subset_size) + " outside [1, " +
                      std::to_string(n_annotators) + "]");
  }
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double annotation_loglik(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) {
    throw DimensionError("annotation of length " + std::to_string(y.size()) + " vs " +
                         std::to_string(p.size()) + " probabilities");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = clamp_probability(p[i]);
    total += y[i] * std::log(c) + (1.0 - y[i]) * std::log(1.0 - c);
  }
  return total;
}

std::vector<double> annotation_logliks(std::span<const double> p, const AnnotationSet& annotations) {
  require_frames(p, annotations);
  std::vector<double> out(annotations.annotators());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = annotation_loglik(p, annotations.annotation(k));
  return out;
}

MixtureWeights mixture_from_subset(std::size_t n_annotators, std::vector<std::size_t> subset,
                                   double a, double b) {
  if (!(0.0 <= a && a <= b && b > 0.0)) throw ConfigError("mixture weights need 0 <= a <= b, b > 0");
  std::sort(subset.begin(), subset.end());
  std::vector<double> q(n_annotators, a);
  for (std::size_t k : subset) {
    if (k >= n_annotators) throw ContractError("subset member " + std::to_string(k) + " out of range");
    q[k] = b;
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= total;
  return MixtureWeights{std::move(q), std::move(subset)};
}

MixtureWeights e_step(std::span<const double> p, const AnnotationSet& annotations,
                      const BceConfig& cfg) {
  cfg.validate(annotations.annotators());
  const std::vector<double> ll = annotation_logliks(p, annotations);
  std::vector<std::size_t> order(ll.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return ll[x] > ll[y]; });
  order.resize(cfg.subset_size);
  return mixture_from_subset(ll.size(), std::move(order), cfg.a, cfg.b);
}

double biased_bce(std::span<const double> p, const AnnotationSet& annotations,
                  const MixtureWeights& weights) {
  const std::vector<double> ll = annotation_logliks(p, annotations);
  if (weights.q.size() != ll.size()) throw DimensionError("mixture size differs from annotator count");
  double loss = 0.0;
  for (std::size_t k = 0; k < ll.size(); ++k) loss -= weights.q[k] * ll[k];
  return loss;
}

Var biased_bce(const Var& p, const AnnotationSet& annotations, const MixtureWeights& weights) {
  const auto pv = p.value().data();
  require_frames(pv, annotations);
  if (weights.q.size() != annotations.annotators()) {
    throw DimensionError("mixture size differs from annotator count");
  }
  const double loss = biased_bce(pv, annotations, weights);
  const std::size_t ip = p.id();
  const Tensor labels = annotations.labels;
  const std::vector<double> q = weights.q;
  return p.tape()->record(
      Tensor::scalar(loss), {ip}, [ip, labels, q](Tape& tp, const Tensor& g) {
        const auto pv = tp.value(ip).data();
        auto d = tp.grad(ip).data();
        const double s = g.item();
        for (std::size_t k = 0; k < q.size(); ++k) {
          if (q[k] == 0.0) continue;
          const auto y = labels.row(k);
          for (std::size_t i = 0; i < d.size(); ++i) {
            if (!inside_clamp(pv[i])) continue;
            d[i] -= s * q[k] * (y[i] / pv[i] - (1.0 - y[i]) / (1.0 - pv[i]));
          }
        }
      });
}

std::vector<double> mean_labels(const AnnotationSet& annotations) {
  const std::size_t m = annotations.annotators(), n = annotations.frames();
  std::vector<double> mean(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto y = annotations.annotation(k);
    for (std::size_t i = 0; i < n; ++i) mean[i] += y[i];
  }
  for (double& v : mean) v /= static_cast<double>(m);
  return mean;
}

double mean_label_bce(std::span<const double> p, const AnnotationSet& annotations) {
  require_frames(p, annotations);
  return -annotation_loglik(p, mean_labels(annotations));
}

Var mean_label_bce(const Var& p, const AnnotationSet& annotations) {
  require_frames(p.value().data(), annotations);
  return soft_target_bce(p, mean_labels(annotations));
}

}  // namespace lgrln
