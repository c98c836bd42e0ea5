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

#include "lgrln/gradsuite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "lgrln/crossmodal.hpp"
#include "lgrln/emloss.hpp"
#include "lgrln/gbt.hpp"
#include "lgrln/gradcheck.hpp"
#include "lgrln/graphgen.hpp"

namespace lgrln {

namespace {

// Cosines closer than this to a threshold could flip class under the
// finite-difference step.
constexpr double kThresholdMargin = 1e-3;

Tensor gaussian(Shape shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data()) v = g(rng);
  return t;
}

std::size_t uniform(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool near_threshold(const Tensor& h, const NeighborLists& nbrs, const GbtConfig& cfg) {
  for (std::size_t t = 0; t < nbrs.size(); ++t) {
    for (std::size_t s : nbrs[t]) {
      const double c = cosine(h.row(t), h.row(s));
      if (std::abs(c - cfg.tau1) < kThresholdMargin || std::abs(c - cfg.tau2) < kThresholdMargin) return true;
    }
  }
  return false;
}

std::vector<Tensor> layer_tensors(const GbtLayerParams& p) {
  return {p.w1, p.b1, p.w2, p.b2, p.norm.alpha, p.norm.gamma, p.norm.beta};
}

GbtLayerVars layer_vars(std::span<const Var> v) { return GbtLayerVars{v[0], v[1], v[2], v[3], v[4], v[5], v[6]}; }

// Perturbs the identity normalization so its gradients are exercised.
GbtLayerParams random_layer(std::size_t dim, Rng& rng) {
  GbtLayerParams p = GbtLayerParams::init(dim, rng);
  p.b1 = gaussian({dim}, rng, 0.1);
  p.b2 = gaussian({dim}, rng, 0.1);
  for (double& a : p.norm.alpha.data()) a = 0.5 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
  for (double& g : p.norm.gamma.data()) g = 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
  p.norm.beta = gaussian({dim}, rng, 0.1);
  return p;
}

struct Instance {
  ScalarGraph graph;
  std::vector<Tensor> inputs;
};

using Generator = std::function<std::optional<Instance>(Rng&)>;

std::optional<Instance> gbt_layer_instance(Rng& rng) {
  GbtConfig cfg;
  const std::size_t n = uniform(3, 7, rng), d = uniform(3, 5, rng);
  const Tensor h = gaussian({n, d}, rng);
  const auto graphs = build_graphs(n, 1.0, 2.5);
  const auto nbrs = uniform(0, 2, rng) == 0 ? branch_neighbors(graphs).forward
                                            : symmetric_neighbors(n, graphs.edges_undirected);
  if (near_threshold(h, nbrs, cfg)) return std::nullopt;
  const std::uint64_t mask_seed = rng();
  const Tensor probe = gaussian({n, d}, rng);
  Instance inst;
  inst.inputs = {h};
  for (auto& t : layer_tensors(random_layer(d, rng))) inst.inputs.push_back(std::move(t));
  inst.graph = [=](Tape&, std::span<const Var> v) {
    Rng mask_rng(mask_seed);
    return weighted_sum(gbt_layer(v[0], nbrs, layer_vars(v.subspan(1)), cfg, ForwardMode{&mask_rng}), probe);
  };
  return inst;
}

std::optional<Instance> graph_norm_instance(Rng& rng) {
  const std::size_t n = uniform(2, 8, rng), d = uniform(1, 5, rng);
  Instance inst;
  inst.inputs = {gaussian({n, d}, rng, 2.0), gaussian({d}, rng), gaussian({d}, rng), gaussian({d}, rng)};
  const Tensor probe = gaussian({n, d}, rng);
  inst.graph = [=](Tape&, std::span<const Var> v) { return weighted_sum(graph_norm(v[0], v[1], v[2], v[3]), probe); };
  return inst;
}

std::optional<Instance> time_embedding_instance(Rng& rng) {
  GbtConfig cfg;
  cfg.max_positions = 12;
  const std::size_t n = uniform(2, 8, rng), d = uniform(2, 5, rng);
  std::vector<std::size_t> positions(n);
  for (auto& p : positions) p = uniform(0, cfg.max_positions - 1, rng);  // repeats allowed
  Instance inst;
  inst.inputs = {gaussian({n, d}, rng), gaussian({cfg.max_positions, d}, rng)};
  const Tensor probe = gaussian({n, d}, rng);
  inst.graph = [=](Tape&, std::span<const Var> v) {
    return weighted_sum(add_time_embedding(v[0], positions, v[1], 0, cfg), probe);
  };
  return inst;
}

std::optional<Instance> crossmodal_instance(Rng& rng) {
  const std::size_t n = uniform(2, 6, rng), l = uniform(1, 4, rng);
  const std::size_t h = uniform(2, 4, rng), dt = uniform(2, 4, rng);
  CrossModalParams p = CrossModalParams::init(dt, h, rng);
  p.update = random_layer(h, rng);
  const std::uint64_t mask_seed = rng();
  const Tensor probe = gaussian({n, h}, rng);
  Instance inst;
  inst.inputs = {gaussian({n, h}, rng), gaussian({l, dt}, rng), p.token_w, p.token_b, p.value_w, p.value_b,
                 p.query_w, p.query_b, p.key_w, p.key_b};
  for (auto& t : layer_tensors(p.update)) inst.inputs.push_back(std::move(t));
  inst.graph = [=](Tape&, std::span<const Var> v) {
    CrossModalVars c{v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], layer_vars(v.subspan(10))};
    Rng mask_rng(mask_seed);
    const Var tokens = embed_tokens(v[1], c.token_w, c.token_b);
    return weighted_sum(fuse(v[0], tokens, c, 0.4, ForwardMode{&mask_rng}), probe);
  };
  return inst;
}

std::optional<Instance> scoring_head_instance(Rng& rng) {
  const std::size_t n = uniform(1, 8, rng), d = uniform(1, 5, rng);
  Instance inst;
  inst.inputs = {gaussian({n, d}, rng, 0.5), gaussian({n, d}, rng, 0.5), gaussian({n, d}, rng, 0.5),
                 gaussian({d, 1}, rng), gaussian({1}, rng)};
  const Tensor probe = gaussian({n}, rng);
  inst.graph = [=](Tape&, std::span<const Var> v) {
    return weighted_sum(score_branches(v[0], v[1], v[2], v[3], v[4]).probs, probe);
  };
  return inst;
}

std::optional<Instance> biased_bce_instance(Rng& rng) {
  const std::size_t n = uniform(1, 10, rng), m = uniform(1, 5, rng);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  Tensor p = Tensor::zeros({n});
  for (double& x : p.data()) x = prob(rng);
  AnnotationSet ann;
  ann.labels = Tensor::zeros({m, n});
  for (double& y : ann.labels.data()) y = static_cast<double>(uniform(0, 1, rng));
  BceConfig cfg;
  cfg.subset_size = uniform(1, m, rng);
  const MixtureWeights w = e_step(p.data(), ann, cfg);
  Instance inst;
  inst.inputs = {p};
  inst.graph = [=](Tape&, std::span<const Var> v) { return biased_bce(v[0], ann, w); };
  return inst;
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(std::size_t instances, std::uint64_t seed) {
  const std::vector<std::pair<std::string, Generator>> ops = {
      {"gbt_layer", gbt_layer_instance},       {"graph_norm", graph_norm_instance},
      {"time_embedding", time_embedding_instance}, {"crossmodal_fuse", crossmodal_instance},
      {"scoring_head", scoring_head_instance}, {"biased_bce", biased_bce_instance},
  };
  std::vector<GradSuiteEntry> out;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    Rng rng(seed * 1000003 + k);
    GradSuiteEntry e;
    e.op = ops[k].first;
    const auto start = std::chrono::steady_clock::now();
    while (e.instances < instances) {
      auto inst = ops[k].second(rng);
      if (!inst) {
        ++e.rejected;
        continue;
      }
      const GradCheckReport r = check_gradients(inst->graph, inst->inputs);
      e.max_error = std::max(e.max_error, r.max_error);
      ++e.instances;
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lgrln
