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
#include <random>
#include <set>
#include <span>
#include <vector>

#include "lgrln/autodiff.hpp"
#include "lgrln/graphgen.hpp"
#include "lgrln/tensor.hpp"

namespace lgrln {

using Rng = std::mt19937_64;

struct GbtConfig {
  double tau1 = 0.5;    // cosine below this: neighbor ignored
  double tau2 = 0.9;    // cosine above this: neighbor weighted alpha1
  double alpha1 = 0.7;
  double alpha2 = 0.3;  // weight for cosines in [tau1, tau2]
  std::size_t hidden_dim = 128;
  std::size_t n_layers = 2;
  double dropout_rate = 0.4;
  std::set<std::size_t> time_embed_layers = {0};
  std::size_t max_positions = 2048;

  void validate() const;
};

/// Whether a forward pass is a training pass. Dropout is active only when
/// `rng` is set.
struct ForwardMode {
  Rng* rng = nullptr;
  bool training() const { return rng != nullptr; }
};

// Ternary weight for one neighbor: 0 if c < tau1, alpha1 if c > tau2, else
// alpha2. Exact threshold hits fall to alpha2.
double bi_threshold_weight(double cos_sim, const GbtConfig& cfg);

// Weights for every (node, neighbor) pair, from the current features.
SparseRows bi_threshold_weights(const Tensor& h, const NeighborLists& neighbors,
                                const GbtConfig& cfg);

// m_i = sum_j w_ij h_j. The weights are constants of the forward pass, so the
// gradient reaches h only through the summed neighbor features.
Var aggregate(const Var& h, const NeighborLists& neighbors, const GbtConfig& cfg);
Tensor aggregate(const Tensor& h, const NeighborLists& neighbors, const GbtConfig& cfg);

inline constexpr double kGraphNormEpsilon = 1e-5;

// Per-feature normalization over the nodes of one graph with a learnable
// mean-shift: out = gamma * (h - alpha*mu) / sigma + beta.
Var graph_norm(const Var& h, const Var& alpha, const Var& gamma, const Var& beta,
               double eps = kGraphNormEpsilon);

struct GraphNormParams {
  Tensor alpha, gamma, beta;
  static GraphNormParams identity(std::size_t dim);
};
Tensor graph_norm(const Tensor& h, const GraphNormParams& params, double eps = kGraphNormEpsilon);

/// Weights of one iteration function GN(h + W2 gelu(W1 m + b1) + b2).
///
/// Matrices are stored input-major (in x out) since node features are rows.
struct GbtLayerParams {
  Tensor w1, b1, w2, b2;
  GraphNormParams norm;

  static GbtLayerParams init(std::size_t dim, Rng& rng);
};

struct GbtLayerVars {
  Var w1, b1, w2, b2;
  Var norm_alpha, norm_gamma, norm_beta;

  static GbtLayerVars bind(Tape& tape, const GbtLayerParams& p, bool trainable);
};

// Residual MLP + graph normalization shared by every message-passing layer.
// `dropout_rate` applies to the gelu activation when `mode` is training.
Var iterate_node_state(const Var& h, const Var& messages, const GbtLayerVars& p,
                       double dropout_rate, ForwardMode mode);

// One bi-threshold graph convolution.
Var gbt_layer(const Var& h, const NeighborLists& neighbors, const GbtLayerVars& p,
              const GbtConfig& cfg, ForwardMode mode);

// Sinusoidal initialization of the time-embedding table.
Tensor sinusoidal_time_table(std::size_t max_positions, std::size_t dim);

// h'_i = h_i + table[positions_i]. `layer_index` must be one of
// cfg.time_embed_layers.
Var add_time_embedding(const Var& h, std::span<const std::size_t> positions, const Var& table,
                       std::size_t layer_index, const GbtConfig& cfg);

// A stack of gbt layers over one graph; time embeddings are added before
// every layer listed in cfg.time_embed_layers.
Var run_branch(const Var& h, std::span<const std::size_t> positions, const NeighborLists& neighbors,
               std::span<const GbtLayerVars> layers, const Var& time_table, const GbtConfig& cfg,
               ForwardMode mode);

struct BranchScores {
  Var logits;  // [n]
  Var probs;   // [n]
};

// z_i = (h_fwd + h_bwd + h_und)_i . w + b, p_i = sigmoid(z_i).
BranchScores score_branches(const Var& h_fwd, const Var& h_bwd, const Var& h_und,
                            const Var& head_w, const Var& head_b);

// Inverted-dropout mask: entries 0 or 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

}  // namespace lgrln
