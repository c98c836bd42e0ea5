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

#include "lgrln/gbt.hpp"

#include <cmath>

#include "lgrln/error.hpp"

namespace lgrln {

void GbtConfig::validate() const {
  if (!(-1.0 <= tau1 && tau1 <= tau2 && tau2 <= 1.0)) {
    throw ConfigError("gbt thresholds need -1 <= tau1 <= tau2 <= 1");
  }
  if (!(alpha1 > alpha2 && alpha2 >= 0.0)) {
    throw ConfigError("gbt weights need alpha1 > alpha2 >= 0");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (n_layers == 0) throw ConfigError("n_layers must be positive");
  if (max_positions == 0) throw ConfigError("max_positions must be positive");
  for (std::size_t layer : time_embed_layers) {
    if (layer >= n_layers) {
      throw ConfigError("time_embed_layers entry " + std::to_string(layer) + " >= n_layers");
    }
  }
}

double bi_threshold_weight(double cos_sim, const GbtConfig& cfg) {
  if (cos_sim < cfg.tau1) return 0.0;
  if (cos_sim > cfg.tau2) return cfg.alpha1;
  return cfg.alpha2;
}

SparseRows bi_threshold_weights(const Tensor& h, const NeighborLists& neighbors,
                                const GbtConfig& cfg) {
  if (h.rank() != 2 || neighbors.size() != h.extent(0)) {
    throw DimensionError("neighbor lists for " + std::to_string(neighbors.size()) +
                         " nodes vs features " + shape_string(h.shape()));
  }
  SparseRows a;
  a.n_cols = h.extent(0);
  a.rows.resize(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    a.rows[i].reserve(neighbors[i].size());
    for (std::size_t j : neighbors[i]) {
      if (j >= a.n_cols) throw DimensionError("neighbor index " + std::to_string(j) + " out of range");
      const double w = bi_threshold_weight(cosine(h.row(i), h.row(j)), cfg);
      if (w != 0.0) a.rows[i].emplace_back(j, w);
    }
  }
  return a;
}

Var aggregate(const Var& h, const NeighborLists& neighbors, const GbtConfig& cfg) {
  return sparse_mix(h, bi_threshold_weights(h.value(), neighbors, cfg));
}

Tensor aggregate(const Tensor& h, const NeighborLists& neighbors, const GbtConfig& cfg) {
  Tape tape;
  tape.set_grad_enabled(false);
  return aggregate(tape.constant(h), neighbors, cfg).value();
}

Var graph_norm(const Var& h, const Var& alpha, const Var& gamma, const Var& beta, double eps) {
  Tape& tape = *h.tape();
  if (alpha.tape() != &tape || gamma.tape() != &tape || beta.tape() != &tape) {
    throw ContractError("graph_norm operands are recorded on different tapes");
  }
  const Tensor& hv = h.value();
  if (hv.rank() != 2 || hv.extent(0) == 0) {
    throw DimensionError("graph_norm needs at least one node, got " + shape_string(hv.shape()));
  }
  const std::size_t n = hv.extent(0), d = hv.extent(1);
  for (const Var* p : {&alpha, &gamma, &beta}) {
    if (p->shape() != Shape{d}) {
      throw DimensionError("graph_norm parameter " + shape_string(p->shape()) + " for width " +
                           std::to_string(d));
    }
  }
  const Tensor& av = alpha.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();

  std::vector<double> mean(d, 0.0), sigma(d, 0.0);
  Tensor centered = hv;
  Tensor out = Tensor::zeros({n, d});
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += hv(r, c);
    mean[c] = s / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = hv(r, c) - av[c] * mean[c];
      centered(r, c) = v;
      sq += v * v;
    }
    sigma[c] = std::sqrt(sq / static_cast<double>(n) + eps);
    for (std::size_t r = 0; r < n; ++r) out(r, c) = gv[c] * centered(r, c) / sigma[c] + bv[c];
  }

  const std::size_t ih = h.id(), ia = alpha.id(), ig = gamma.id(), ib = beta.id();
  return tape.record(
      std::move(out), {ih, ia, ig, ib},
      [=, centered = std::move(centered), mean = std::move(mean), sigma = std::move(sigma)](
          Tape& tp, const Tensor& g) {
        const Tensor& a = tp.value(ia);
        const Tensor& gm = tp.value(ig);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < d; ++c) {
          double g_sum = 0.0, g_dot = 0.0;
          for (std::size_t r = 0; r < n; ++r) {
            g_sum += g(r, c);
            g_dot += g(r, c) * centered(r, c);
          }
          if (tp.needs_grad(ib)) tp.grad(ib)[c] += g_sum;
          if (tp.needs_grad(ig)) tp.grad(ig)[c] += g_dot / sigma[c];
          if (!tp.needs_grad(ih) && !tp.needs_grad(ia)) continue;
          // d loss / d centered, through both the numerator and sigma.
          const double s3 = sigma[c] * sigma[c] * sigma[c];
          const double k = gm[c] * g_dot * inv_n / s3;
          double dc_sum = 0.0;
          std::vector<double> dc(n);
          for (std::size_t r = 0; r < n; ++r) {
            dc[r] = gm[c] * g(r, c) / sigma[c] - k * centered(r, c);
            dc_sum += dc[r];
          }
          if (tp.needs_grad(ia)) tp.grad(ia)[c] += -mean[c] * dc_sum;
          if (tp.needs_grad(ih)) {
            Tensor& gh = tp.grad(ih);
            const double shift = a[c] * dc_sum * inv_n;
            for (std::size_t r = 0; r < n; ++r) gh(r, c) += dc[r] - shift;
          }
        }
      });
}

GraphNormParams GraphNormParams::identity(std::size_t dim) {
  return GraphNormParams{Tensor::filled({dim}, 1.0), Tensor::filled({dim}, 1.0),
                         Tensor::zeros({dim})};
}

Tensor graph_norm(const Tensor& h, const GraphNormParams& params, double eps) {
  Tape tape;
  tape.set_grad_enabled(false);
  return graph_norm(tape.constant(h), tape.constant(params.alpha), tape.constant(params.gamma),
                    tape.constant(params.beta), eps)
      .value();
}

namespace {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w = Tensor::zeros({fan_in, fan_out});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

}  // namespace

GbtLayerParams GbtLayerParams::init(std::size_t dim, Rng& rng) {
  GbtLayerParams p;
  p.w1 = xavier_uniform(dim, dim, rng);
  p.b1 = Tensor::zeros({dim});
  p.w2 = xavier_uniform(dim, dim, rng);
  p.b2 = Tensor::zeros({dim});
  p.norm = GraphNormParams::identity(dim);
  return p;
}

GbtLayerVars GbtLayerVars::bind(Tape& tape, const GbtLayerParams& p, bool trainable) {
  return GbtLayerVars{tape.leaf(p.w1, trainable),         tape.leaf(p.b1, trainable),
                      tape.leaf(p.w2, trainable),         tape.leaf(p.b2, trainable),
                      tape.leaf(p.norm.alpha, trainable), tape.leaf(p.norm.gamma, trainable),
                      tape.leaf(p.norm.beta, trainable)};
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  Tensor mask = Tensor::zeros(shape);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  for (double& v : mask.data()) v = keep(rng) ? keep_scale : 0.0;
  return mask;
}

Var iterate_node_state(const Var& h, const Var& messages, const GbtLayerVars& p,
                       double dropout_rate, ForwardMode mode) {
  Var act = gelu(linear(messages, p.w1, p.b1));
  if (mode.training() && dropout_rate > 0.0) {
    act = mask_mul(act, dropout_mask(act.shape(), dropout_rate, *mode.rng));
  }
  Var update = linear(act, p.w2, p.b2);
  return graph_norm(add(h, update), p.norm_alpha, p.norm_gamma, p.norm_beta);
}

Var gbt_layer(const Var& h, const NeighborLists& neighbors, const GbtLayerVars& p,
              const GbtConfig& cfg, ForwardMode mode) {
  return iterate_node_state(h, aggregate(h, neighbors, cfg), p, cfg.dropout_rate, mode);
}

Tensor sinusoidal_time_table(std::size_t max_positions, std::size_t dim) {
  Tensor table = Tensor::zeros({max_positions, dim});
  for (std::size_t pos = 0; pos < max_positions; ++pos) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (c / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * freq;
      table(pos, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

Var add_time_embedding(const Var& h, std::span<const std::size_t> positions, const Var& table,
                       std::size_t layer_index, const GbtConfig& cfg) {
  if (cfg.time_embed_layers.count(layer_index) == 0) {
    throw ContractError("layer " + std::to_string(layer_index) + " does not take time embeddings");
  }
  const std::size_t capacity = table.shape().at(0);
  for (std::size_t pos : positions) {
    if (pos >= capacity) {
      throw CapacityError("frame position " + std::to_string(pos) +
                          " exceeds time-embedding capacity max_positions=" +
                          std::to_string(capacity));
    }
  }
  if (positions.size() != h.shape().at(0)) {
    throw DimensionError(std::to_string(positions.size()) + " positions for " +
                         shape_string(h.shape()) + " features");
  }
  return add(h, gather_rows(table, positions));
}

Var run_branch(const Var& h, std::span<const std::size_t> positions, const NeighborLists& neighbors,
               std::span<const GbtLayerVars> layers, const Var& time_table, const GbtConfig& cfg,
               ForwardMode mode) {
  Var state = h;
  for (std::size_t t = 0; t < layers.size(); ++t) {
    if (cfg.time_embed_layers.count(t)) {
      state = add_time_embedding(state, positions, time_table, t, cfg);
    }
    state = gbt_layer(state, neighbors, layers[t], cfg, mode);
  }
  return state;
}

BranchScores score_branches(const Var& h_fwd, const Var& h_bwd, const Var& h_und,
                            const Var& head_w, const Var& head_b) {
  if (h_fwd.shape() != h_bwd.shape() || h_fwd.shape() != h_und.shape()) {
    throw DimensionError("branch outputs differ: " + shape_string(h_fwd.shape()) + ", " +
                         shape_string(h_bwd.shape()) + ", " + shape_string(h_und.shape()));
  }
  const std::size_t n = h_fwd.shape().at(0);
  Var combined = add(add(h_fwd, h_bwd), h_und);
  Var logits = reshape(linear(combined, head_w, head_b), {n});
  return BranchScores{logits, sigmoid(logits)};
}

}  // namespace lgrln
