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
#include <optional>
#include <span>
#include <vector>

#include "lgrln/autodiff.hpp"
#include "lgrln/tensor.hpp"

namespace lgrln {

inline constexpr double kProbabilityClamp = 1e-7;

/// Keyshot labels of m annotators over n frames.
struct AnnotationSet {
  Tensor labels;                     // [m x n], entries 0 or 1
  std::optional<Tensor> importance;  // [m x n] real-valued scores

  std::size_t annotators() const { return labels.extent(0); }
  std::size_t frames() const { return labels.extent(1); }
  std::span<const double> annotation(std::size_t k) const { return labels.row(k); }

  // Throws DimensionError/ContractError when the invariants do not hold.
  void validate(std::size_t n_frames) const;
};

/// Raw two-level weights; e_step renormalizes them into a distribution.
struct BceConfig {
  double a = 0.02;              // weight of annotators outside the subset
  double b = 0.16;              // weight of the closest subset
  std::size_t subset_size = 1;

  // Requires 0 <= a < b < 1 and 1 <= subset_size <= m.
  void validate(std::size_t n_annotators) const;
};

struct MixtureWeights {
  std::vector<double> q;            // one weight per annotator, sums to 1
  std::vector<std::size_t> subset;  // annotators holding the larger weight, ascending
};

double clamp_probability(double p);

// sum_i y_i log p_i + (1 - y_i) log(1 - p_i) with p clamped to
// [kProbabilityClamp, 1 - kProbabilityClamp].
double annotation_loglik(std::span<const double> p, std::span<const double> y);

std::vector<double> annotation_logliks(std::span<const double> p, const AnnotationSet& annotations);

// q(k) = b for k in `subset`, a otherwise, divided by the raw total. Accepts
// a == b, which yields the uniform mixture.
MixtureWeights mixture_from_subset(std::size_t n_annotators, std::vector<std::size_t> subset,
                                   double a, double b);

// Ranks annotators by log-likelihood (ties: lower index first) and gives the
// top cfg.subset_size of them the larger weight.
MixtureWeights e_step(std::span<const double> p, const AnnotationSet& annotations,
                      const BceConfig& cfg);

// -sum_k q(k) loglik(p, y_k). q is a constant of the step.
double biased_bce(std::span<const double> p, const AnnotationSet& annotations,
                  const MixtureWeights& weights);
Var biased_bce(const Var& p, const AnnotationSet& annotations, const MixtureWeights& weights);

// Cross-entropy against the arithmetic mean of the annotations.
double mean_label_bce(std::span<const double> p, const AnnotationSet& annotations);
Var mean_label_bce(const Var& p, const AnnotationSet& annotations);

// Mean of the label rows.
std::vector<double> mean_labels(const AnnotationSet& annotations);

}  // namespace lgrln
