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

#include "lgrln/model.hpp"

#include <cmath>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

constexpr std::array<const char*, 3> kBranchNames = {"forward", "backward", "undirected"};

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w = Tensor::zeros({fan_in, fan_out});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

template <typename Params, typename Out>
void enumerate(Params& p, Out& out) {
  out.emplace_back("input.w", &p.input_w);
  out.emplace_back("input.b", &p.input_b);
  out.emplace_back("time.table", &p.time_table);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t l = 0; l < p.branches[b].size(); ++l) {
      auto& layer = p.branches[b][l];
      const std::string prefix = std::string("gbt.") + kBranchNames[b] + "." + std::to_string(l) + ".";
      out.emplace_back(prefix + "w1", &layer.w1);
      out.emplace_back(prefix + "b1", &layer.b1);
      out.emplace_back(prefix + "w2", &layer.w2);
      out.emplace_back(prefix + "b2", &layer.b2);
      out.emplace_back(prefix + "norm_alpha", &layer.norm.alpha);
      out.emplace_back(prefix + "norm_gamma", &layer.norm.gamma);
      out.emplace_back(prefix + "norm_beta", &layer.norm.beta);
    }
  }
  out.emplace_back("head.w", &p.head_w);
  out.emplace_back("head.b", &p.head_b);
  auto& c = p.crossmodal;
  out.emplace_back("cross.token_w", &c.token_w);
  out.emplace_back("cross.token_b", &c.token_b);
  out.emplace_back("cross.value_w", &c.value_w);
  out.emplace_back("cross.value_b", &c.value_b);
  out.emplace_back("cross.query_w", &c.query_w);
  out.emplace_back("cross.query_b", &c.query_b);
  out.emplace_back("cross.key_w", &c.key_w);
  out.emplace_back("cross.key_b", &c.key_b);
  out.emplace_back("cross.update.w1", &c.update.w1);
  out.emplace_back("cross.update.b1", &c.update.b1);
  out.emplace_back("cross.update.w2", &c.update.w2);
  out.emplace_back("cross.update.b2", &c.update.b2);
  out.emplace_back("cross.update.norm_alpha", &c.update.norm.alpha);
  out.emplace_back("cross.update.norm_gamma", &c.update.norm.gamma);
  out.emplace_back("cross.update.norm_beta", &c.update.norm.beta);
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim == 0) throw ConfigError("model input_dim must be positive");
  if (token_dim == 0) throw ConfigError("model token_dim must be positive");
  gbt.validate();
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t h = cfg.gbt.hidden_dim;
  ModelParams p;
  p.input_w = glorot(cfg.input_dim, h, rng);
  p.input_b = Tensor::zeros({h});
  p.time_table = sinusoidal_time_table(cfg.gbt.max_positions, h);
  for (auto& branch : p.branches) {
    for (std::size_t l = 0; l < cfg.gbt.n_layers; ++l) branch.push_back(GbtLayerParams::init(h, rng));
  }
  p.head_w = glorot(h, 1, rng);
  p.head_b = Tensor::zeros({1});
  p.crossmodal = CrossModalParams::init(cfg.token_dim, h, rng);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  enumerate(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  enumerate(*this, out);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : named()) total += t->numel();
  return total;
}

VideoGraphs make_graphs(std::size_t n_frames, const GraphSpec& spec) {
  if (spec.timestamps) {
    if (spec.timestamps->size() != n_frames) {
      throw DimensionError(std::to_string(spec.timestamps->size()) + " timestamps for " +
                           std::to_string(n_frames) + " frames");
    }
    return build_graphs_from_timestamps(*spec.timestamps, spec.fps, spec.tau);
  }
  return build_graphs(n_frames, spec.fps, spec.tau);
}

ForwardPass forward(Tape& tape, const Model& model, const Tensor& features, const Tensor* query_tokens,
                    const GraphSpec& graph_spec, ForwardMode mode, bool trainable) {
  const ModelConfig& cfg = model.config;
  if (features.rank() != 2 || features.extent(1) != cfg.input_dim || features.extent(0) == 0) {
    throw DimensionError("features " + shape_string(features.shape()) + " do not match model input width " +
                         std::to_string(cfg.input_dim));
  }
  if (query_tokens && query_tokens->rank() == 2 && query_tokens->extent(0) > 0 &&
      query_tokens->extent(1) != cfg.token_dim) {
    throw DimensionError("query tokens " + shape_string(query_tokens->shape()) +
                         " do not match model token width " + std::to_string(cfg.token_dim));
  }

  ForwardPass pass;
  const auto named = model.params.named();
  pass.params.reserve(named.size());
  for (const auto& [name, t] : named) pass.params.push_back(tape.leaf(*t, trainable));

  std::size_t k = 0;
  const Var input_w = pass.params[k++];
  const Var input_b = pass.params[k++];
  const Var time_table = pass.params[k++];
  std::array<std::vector<GbtLayerVars>, 3> layers;
  for (auto& branch : layers) {
    for (std::size_t l = 0; l < cfg.gbt.n_layers; ++l) {
      const auto& P = pass.params;
      branch.push_back(GbtLayerVars{P[k], P[k + 1], P[k + 2], P[k + 3], P[k + 4], P[k + 5], P[k + 6]});
      k += 7;
    }
  }
  const Var head_w = pass.params[k++];
  const Var head_b = pass.params[k++];
  CrossModalVars cross;
  cross.token_w = pass.params[k++];
  cross.token_b = pass.params[k++];
  cross.value_w = pass.params[k++];
  cross.value_b = pass.params[k++];
  cross.query_w = pass.params[k++];
  cross.query_b = pass.params[k++];
  cross.key_w = pass.params[k++];
  cross.key_b = pass.params[k++];
  {
    const auto& P = pass.params;
    cross.update = GbtLayerVars{P[k], P[k + 1], P[k + 2], P[k + 3], P[k + 4], P[k + 5], P[k + 6]};
    k += 7;
  }

  Var h = linear(tape.constant(features), input_w, input_b);
  if (query_tokens && query_tokens->rank() == 2 && query_tokens->extent(0) > 0) {
    Var tokens = embed_tokens(tape.constant(*query_tokens), cross.token_w, cross.token_b);
    h = fuse(h, tokens, cross, cfg.gbt.dropout_rate, mode);
  }

  pass.graphs = make_graphs(features.extent(0), graph_spec);
  const BranchNeighbors nbrs = branch_neighbors(pass.graphs);
  const std::array<const NeighborLists*, 3> lists = {&nbrs.forward, &nbrs.backward, &nbrs.undirected};
  std::array<Var, 3> outs;
  for (std::size_t b = 0; b < 3; ++b) {
    outs[b] = run_branch(h, pass.graphs.positions, *lists[b], layers[b], time_table, cfg.gbt, mode);
  }
  const BranchScores scores = score_branches(outs[0], outs[1], outs[2], head_w, head_b);
  pass.logits = scores.logits;
  pass.probs = scores.probs;
  return pass;
}

std::vector<double> predict(const Model& model, const Tensor& features, const Tensor* query_tokens,
                            const GraphSpec& graphs) {
  Tape tape;
  tape.set_grad_enabled(false);
  const ForwardPass pass = forward(tape, model, features, query_tokens, graphs, ForwardMode{}, false);
  const auto p = pass.probs.value().data();
  return {p.begin(), p.end()};
}

}  // namespace lgrln
