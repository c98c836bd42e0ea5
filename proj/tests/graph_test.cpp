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

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lgrln/crossmodal.hpp"
#include "lgrln/error.hpp"
#include "lgrln/gbt.hpp"
#include "lgrln/gradcheck.hpp"
#include "lgrln/graphgen.hpp"
#include "oracles.hpp"

namespace lgrln {
namespace {

std::vector<Edge> sorted(std::vector<Edge> e) {
  std::sort(e.begin(), e.end());
  return e;
}

TEST(BuildGraphs, SingleFrameHasNoEdges) {
  const auto g = build_graphs(1, 3.0, 100.0);
  EXPECT_TRUE(g.edges_forward.empty());
  EXPECT_TRUE(g.edges_backward.empty());
  EXPECT_TRUE(g.edges_undirected.empty());
}

TEST(BuildGraphs, ThresholdIsStrict) {
  const auto g = build_graphs(4, 1.0, 2.0);
  EXPECT_EQ(g.edges_forward, (std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}}));
}

TEST(BuildGraphs, MatchesAllPairsScan) {
  const auto g = build_graphs(10, 2.0, 1.6);
  const auto ref = oracle::all_pairs_edges(10, 2.0, 1.6);
  EXPECT_EQ(sorted(g.edges_forward), ref.forward);
  EXPECT_EQ(sorted(g.edges_backward), ref.backward);
  EXPECT_EQ(sorted(g.edges_undirected), ref.undirected);
}

TEST(BuildGraphs, EdgeCountsAgreeAndGrowWithTau) {
  oracle::Rng rng(4);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng() % 25;
    const double fps = u(rng), t1 = u(rng), t2 = t1 + u(rng);
    const auto a = build_graphs(n, fps, t1), b = build_graphs(n, fps, t2);
    EXPECT_EQ(a.edges_forward.size(), a.edges_backward.size());
    EXPECT_EQ(a.edges_forward.size(), a.edges_undirected.size());
    for (const auto& e : a.edges_forward) {
      EXPECT_NE(std::find(b.edges_forward.begin(), b.edges_forward.end(), e), b.edges_forward.end());
    }
  }
}

TEST(BuildGraphs, TimestampsAndPositions) {
  const std::vector<double> ts = {0.0, 0.1, 0.5, 2.0};
  const auto g = build_graphs_from_timestamps(ts, 10.0, 0.6);
  EXPECT_EQ(g.edges_forward, (std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}}));
  const auto p = build_graphs(std::vector<std::size_t>{0, 2, 3, 9}, 1.0, 2.5);
  EXPECT_EQ(p.edges_forward, (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_THROW(build_graphs(std::vector<std::size_t>{3, 1}, 1.0, 1.0), ConfigError);
  EXPECT_THROW(build_graphs(3, 0.0, 1.0), ConfigError);
  EXPECT_THROW(build_graphs(3, 1.0, -1.0), ConfigError);
}

TEST(BuildGraphs, NeighborListsAndJson) {
  const auto g = build_graphs(3, 1.0, 1.5);
  const auto nb = branch_neighbors(g);
  EXPECT_EQ(nb.forward, (NeighborLists{{}, {0}, {1}}));
  EXPECT_EQ(nb.backward, (NeighborLists{{1}, {2}, {}}));
  EXPECT_EQ(nb.undirected, (NeighborLists{{1}, {0, 2}, {1}}));
  const auto j = nlohmann::json::parse(graphs_to_json(g));
  EXPECT_EQ(j["forward"].size(), 2u);
}

TEST(Aggregate, IsolatedNodeAndForcedBranch) {
  const GbtConfig cfg;
  const Tensor h = Tensor::matrix({{1, 2}, {1, 2}, {3, -1}});
  const Tensor m = aggregate(h, NeighborLists{{1}, {}, {}}, cfg);
  EXPECT_EQ(m(0, 0), 0.7 * 1);
  EXPECT_EQ(m(0, 1), 0.7 * 2);
  for (std::size_t r = 1; r < 3; ++r) {
    EXPECT_EQ(m(r, 0), 0.0);
    EXPECT_EQ(m(r, 1), 0.0);
  }
}

TEST(Aggregate, ThreeClassHandCase) {
  const GbtConfig cfg;  // tau (0.5, 0.9), alpha (0.7, 0.3)
  const Tensor h = Tensor::matrix({{1, 0}, {1, 0}, {0, 1}, {0.8, 0.6}});
  const Tensor m = aggregate(h, NeighborLists{{1, 2, 3}, {}, {}, {}}, cfg);
  EXPECT_NEAR(m(0, 0), 0.94, 1e-15);
  EXPECT_NEAR(m(0, 1), 0.18, 1e-15);
}

TEST(Aggregate, BoundaryCosinesUseMiddleWeight) {
  const GbtConfig cfg;
  EXPECT_EQ(bi_threshold_weight(0.5, cfg), 0.3);
  EXPECT_EQ(bi_threshold_weight(0.9, cfg), 0.3);
  EXPECT_EQ(bi_threshold_weight(0.4999, cfg), 0.0);
  EXPECT_EQ(bi_threshold_weight(0.9001, cfg), 0.7);
}

TEST(Aggregate, DegeneratesToPlainSum) {
  GbtConfig cfg;
  cfg.tau1 = -1.0;
  cfg.alpha1 = cfg.alpha2 = 0.25;
  oracle::Rng rng(8);
  const Tensor h = oracle::random_matrix(6, 3, rng);
  const auto nb = branch_neighbors(build_graphs(6, 1.0, 3.5)).undirected;
  const Tensor m = aggregate(h, nb, cfg);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t src : nb[t]) s += h(src, j);
      EXPECT_NEAR(m(t, j), 0.25 * s, 1e-14);
    }
}

TEST(Aggregate, MatchesDirectEvaluation) {
  const GbtConfig cfg;
  oracle::Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + rng() % 20;
    const Tensor h = oracle::random_matrix(n, 3, rng);
    const auto nb = branch_neighbors(build_graphs(n, 1.0, 4.5)).forward;
    const Tensor m = aggregate(h, nb, cfg);
    const Tensor ref = oracle::direct_messages(h, nb, cfg.tau1, cfg.tau2, cfg.alpha1, cfg.alpha2);
    for (std::size_t i = 0; i < m.numel(); ++i) EXPECT_NEAR(m[i], ref[i], 1e-12);
  }
}

TEST(GraphNorm, SingleNodeGivesBeta) {
  GraphNormParams p = GraphNormParams::identity(2);
  p.beta = Tensor::vector({0.5, -1.0});
  const Tensor out = graph_norm(Tensor::matrix({{3, 7}}), p);
  EXPECT_EQ(out(0, 0), 0.5);
  EXPECT_EQ(out(0, 1), -1.0);
}

TEST(GraphNorm, ZeroShiftDividesByRms) {
  GraphNormParams p = GraphNormParams::identity(2);
  p.alpha = Tensor::vector({0, 0});
  const Tensor h = Tensor::matrix({{1, 2}, {3, -2}, {-1, 0}});
  const Tensor out = graph_norm(h, p);
  for (std::size_t j = 0; j < 2; ++j) {
    double ms = 0.0;
    for (std::size_t i = 0; i < 3; ++i) ms += h(i, j) * h(i, j) / 3.0;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out(i, j), h(i, j) / std::sqrt(ms + kGraphNormEpsilon), 1e-14);
  }
}

TEST(GraphNorm, MatchesTwoPassStatistics) {
  oracle::Rng rng(12);
  const Tensor h = oracle::random_matrix(5, 3, rng, 3.0);
  GraphNormParams p{Tensor::vector({0.3, 1.0, 0.8}), Tensor::vector({1.5, 0.7, -1.0}),
                    Tensor::vector({0.1, 0.2, 0.3})};
  const Tensor out = graph_norm(h, p);
  const Tensor ref = oracle::two_pass_graph_norm(h, p.alpha.data(), p.gamma.data(), p.beta.data(), kGraphNormEpsilon);
  for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-10);
}

GbtLayerParams zero_bias_layer(std::size_t d, oracle::Rng& rng) {
  GbtLayerParams p = GbtLayerParams::init(d, rng);
  p.b1 = Tensor::zeros({d});
  p.b2 = Tensor::zeros({d});
  return p;
}

Tensor run_layer(const Tensor& h, const NeighborLists& nb, const GbtLayerParams& p, const GbtConfig& cfg) {
  Tape tape;
  const Var out = gbt_layer(tape.constant(h), nb, GbtLayerVars::bind(tape, p, false), cfg, ForwardMode{});
  return out.value();
}

TEST(GbtLayer, IsolatedGraphReducesToNorm) {
  oracle::Rng rng(2);
  const Tensor h = oracle::random_matrix(4, 3, rng);
  const GbtLayerParams p = zero_bias_layer(3, rng);
  EXPECT_EQ(run_layer(h, NeighborLists(4), p, GbtConfig{}), graph_norm(h, p.norm));
}

TEST(GbtLayer, ZeroSecondWeightLeavesResidualPlusBias) {
  oracle::Rng rng(3);
  const Tensor h = oracle::random_matrix(5, 3, rng);
  GbtLayerParams p = GbtLayerParams::init(3, rng);
  p.w2 = Tensor::zeros({3, 3});
  p.b2 = Tensor::vector({0.25, -0.5, 1.0});
  Tensor shifted = h;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) shifted(i, j) += p.b2[j];
  const auto nb = branch_neighbors(build_graphs(5, 1.0, 2.5)).undirected;
  EXPECT_EQ(run_layer(h, nb, p, GbtConfig{}), graph_norm(shifted, p.norm));
}

TEST(GbtLayer, PermutationEquivariant) {
  oracle::Rng rng(6);
  const std::size_t n = 6;
  const Tensor h = oracle::random_matrix(n, 4, rng);
  const GbtLayerParams p = GbtLayerParams::init(4, rng);
  const auto nb = branch_neighbors(build_graphs(n, 1.0, 2.5)).forward;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor hp = Tensor::zeros({n, 4});
  NeighborLists nbp(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) hp(perm[i], j) = h(i, j);
    for (std::size_t s : nb[i]) nbp[perm[i]].push_back(perm[s]);
  }
  const Tensor out = run_layer(h, nb, p, GbtConfig{}), outp = run_layer(hp, nbp, p, GbtConfig{});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(outp(perm[i], j), out(i, j), 1e-13);
}

TEST(GbtLayer, EvalModeIsDeterministic) {
  oracle::Rng rng(10);
  const Tensor h = oracle::random_matrix(5, 3, rng);
  const GbtLayerParams p = GbtLayerParams::init(3, rng);
  const auto nb = branch_neighbors(build_graphs(5, 1.0, 2.5)).backward;
  EXPECT_EQ(run_layer(h, nb, p, GbtConfig{}), run_layer(h, nb, p, GbtConfig{}));
}

TEST(Dropout, InvertedMaskHasUnitMean) {
  Rng rng(1);
  const Tensor mask = dropout_mask({200, 100}, 0.4, rng);
  double total = 0.0;
  for (double v : mask.data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.6) < 1e-15);
    total += v;
  }
  EXPECT_NEAR(total / static_cast<double>(mask.numel()), 1.0, 0.02);
}

TEST(GbtLayer, GradientsMatchFiniteDifferences) {
  oracle::Rng rng(14);
  const GbtConfig cfg;
  const auto nb = branch_neighbors(build_graphs(5, 1.0, 2.5)).undirected;
  const Tensor h = oracle::random_matrix(5, 3, rng);
  const GbtLayerParams p = GbtLayerParams::init(3, rng);
  const Tensor probe = oracle::random_matrix(5, 3, rng);
  const auto report = check_gradients(
      [&](Tape&, std::span<const Var> v) {
        Rng mask_rng(99);
        return weighted_sum(gbt_layer(v[0], nb, GbtLayerVars{v[1], v[2], v[3], v[4], v[5], v[6], v[7]}, cfg,
                                      ForwardMode{&mask_rng}),
                            probe);
      },
      {h, p.w1, p.b1, p.w2, p.b2, p.norm.alpha, p.norm.gamma, p.norm.beta});
  EXPECT_LT(report.max_error, 1e-4);
}

TEST(TimeEmbedding, ZeroTableAndSharedPositions) {
  GbtConfig cfg;
  cfg.max_positions = 4;
  Tape tape;
  const Tensor h = Tensor::matrix({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> pos = {0, 2, 2};
  const Tensor same = add_time_embedding(tape.constant(h), pos, tape.constant(Tensor::zeros({4, 2})), 0, cfg).value();
  EXPECT_EQ(same, h);
  const Tensor offsets =
      add_time_embedding(tape.constant(Tensor::zeros({3, 2})), pos, tape.constant(sinusoidal_time_table(4, 2)), 0, cfg)
          .value();
  EXPECT_EQ(offsets(1, 0), offsets(2, 0));
  EXPECT_EQ(offsets(1, 1), offsets(2, 1));
  EXPECT_NE(offsets(0, 0), offsets(1, 0));
}

TEST(TimeEmbedding, Errors) {
  GbtConfig cfg;
  cfg.max_positions = 3;
  Tape tape;
  const Var h = tape.constant(Tensor::zeros({2, 2}));
  const Var table = tape.constant(Tensor::zeros({3, 2}));
  const std::vector<std::size_t> ok = {0, 1}, far = {1, 3};
  EXPECT_THROW(add_time_embedding(h, ok, table, 1, cfg), ContractError);
  try {
    add_time_embedding(h, far, table, 0, cfg);
    FAIL();
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("max_positions=3"), std::string::npos);
  }
}

TEST(TimeEmbedding, TableGradientCountsRepeats) {
  GbtConfig cfg;
  cfg.max_positions = 5;
  Tape tape;
  const Var h = tape.constant(Tensor::zeros({3, 2}));
  const Var table = tape.parameter(Tensor::zeros({5, 2}));
  const std::vector<std::size_t> pos = {4, 1, 4};
  const GradMap g = tape.backward(sum(add_time_embedding(h, pos, table, 0, cfg)));
  EXPECT_EQ(g.at(table), Tensor::matrix({{0, 0}, {1, 1}, {0, 0}, {0, 0}, {2, 2}}));
}

TEST(ScoreBranches, ZeroInputsGiveHalf) {
  Tape tape;
  const Var z = tape.constant(Tensor::zeros({4, 3}));
  const auto s = score_branches(z, z, z, tape.constant(Tensor::filled({3, 1}, 0.7)), tape.constant(Tensor::zeros({1})));
  for (double p : s.probs.value().data()) EXPECT_EQ(p, 0.5);
}

TEST(ScoreBranches, BranchOrderAndNodePermutation) {
  oracle::Rng rng(13);
  Tape tape;
  const Tensor a = oracle::random_matrix(4, 3, rng), b = oracle::random_matrix(4, 3, rng),
               c = oracle::random_matrix(4, 3, rng);
  const Var w = tape.constant(oracle::random_matrix(3, 1, rng)), bias = tape.constant(Tensor::vector({0.1}));
  const auto s1 = score_branches(tape.constant(a), tape.constant(b), tape.constant(c), w, bias);
  const auto s2 = score_branches(tape.constant(c), tape.constant(a), tape.constant(b), w, bias);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s1.logits.value()[i], s2.logits.value()[i], 1e-15);

  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  auto permute = [&](const Tensor& t) {
    Tensor out = Tensor::zeros(t.shape());
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) out(perm[i], j) = t(i, j);
    return out;
  };
  const auto s3 = score_branches(tape.constant(permute(a)), tape.constant(permute(b)), tape.constant(permute(c)), w, bias);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s3.probs.value()[perm[i]], s1.probs.value()[i]);
}

CrossModalVars identity_projections(Tape& tape, std::size_t d) {
  oracle::Rng rng(0);
  CrossModalParams p = CrossModalParams::init(d, d, rng);
  Tensor eye = Tensor::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i) eye(i, i) = 1.0;
  p.token_w = p.value_w = p.query_w = p.key_w = eye;
  p.token_b = p.value_b = p.query_b = p.key_b = Tensor::zeros({d});
  return CrossModalVars::bind(tape, p, false);
}

TEST(Crossmodal, SingleTokenGetsFullAttention) {
  oracle::Rng rng(1);
  Tape tape;
  const CrossModalVars p = CrossModalVars::bind(tape, CrossModalParams::init(3, 3, rng), false);
  const Var a = token_attention(tape.constant(oracle::random_matrix(5, 3, rng)),
                                tape.constant(oracle::random_matrix(1, 3, rng)), p);
  for (double v : a.value().data()) EXPECT_EQ(v, 1.0);
}

TEST(Crossmodal, AttentionRowsSumToOne) {
  oracle::Rng rng(2);
  Tape tape;
  const CrossModalVars p = CrossModalVars::bind(tape, CrossModalParams::init(4, 4, rng), false);
  const Tensor a = token_attention(tape.constant(oracle::random_matrix(6, 4, rng)),
                                   tape.constant(oracle::random_matrix(5, 4, rng)), p)
                       .value();
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Crossmodal, TwoTokenHandCase) {
  Tape tape;
  const CrossModalVars p = identity_projections(tape, 2);
  const Var video = tape.constant(Tensor::matrix({{1, 0}}));
  const Var tokens = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  const Tensor a = token_attention(video, tokens, p).value();
  const double e = std::exp(1.0);
  EXPECT_NEAR(a(0, 0), e / (e + 1), 1e-15);
  EXPECT_NEAR(a(0, 1), 1 / (e + 1), 1e-15);
  const Tensor m = token_messages(video, tokens, p).value();
  EXPECT_NEAR(m(0, 0), e / (e + 1), 1e-15);
  EXPECT_NEAR(m(0, 1), 1 / (e + 1), 1e-15);
}

TEST(Crossmodal, EmbedTokensLinearity) {
  oracle::Rng rng(4);
  Tape tape;
  const Var zero = embed_tokens(tape.constant(oracle::random_matrix(3, 4, rng)), tape.constant(Tensor::zeros({4, 2})),
                                tape.constant(Tensor::zeros({2})));
  for (double v : zero.value().data()) EXPECT_EQ(v, 0.0);

  const Tensor w = oracle::random_matrix(4, 2, rng), b = oracle::random_matrix(1, 2, rng).reshaped({2});
  const Tensor x = oracle::random_matrix(5, 4, rng);
  const Tensor all = embed_tokens(tape.constant(x), tape.constant(w), tape.constant(b)).value();
  for (std::size_t r = 0; r < 5; ++r) {
    const Tensor row = Tensor({1, 4}, {x.row(r).begin(), x.row(r).end()});
    const Tensor one = embed_tokens(tape.constant(row), tape.constant(w), tape.constant(b)).value();
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(one(0, j), all(r, j));
  }
}

Tensor fuse_eval(const Tensor& video, const Tensor& tokens, const CrossModalParams& params) {
  Tape tape;
  const CrossModalVars p = CrossModalVars::bind(tape, params, false);
  return fuse(tape.constant(video), tape.constant(tokens), p, 0.4, ForwardMode{}).value();
}

TEST(Crossmodal, TokenOrderAndMultiplicityInvariance) {
  oracle::Rng rng(5);
  const CrossModalParams params = CrossModalParams::init(3, 3, rng);
  const Tensor video = oracle::random_matrix(4, 3, rng);
  const Tensor tokens = oracle::random_matrix(3, 3, rng);
  const Tensor reversed = Tensor::matrix({{tokens(2, 0), tokens(2, 1), tokens(2, 2)},
                                          {tokens(1, 0), tokens(1, 1), tokens(1, 2)},
                                          {tokens(0, 0), tokens(0, 1), tokens(0, 2)}});
  const Tensor a = fuse_eval(video, tokens, params), b = fuse_eval(video, reversed, params);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);

  const Tensor one = Tensor({1, 3}, {tokens.row(0).begin(), tokens.row(0).end()});
  Tensor many = Tensor::zeros({4, 3});
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t j = 0; j < 3; ++j) many(l, j) = tokens(0, j);
  const Tensor c = fuse_eval(video, one, params), d = fuse_eval(video, many, params);
  for (std::size_t i = 0; i < c.numel(); ++i) EXPECT_NEAR(c[i], d[i], 1e-12);
}

TEST(Crossmodal, EmptyQueryReturnsInput) {
  oracle::Rng rng(6);
  Tape tape;
  const CrossModalVars p = CrossModalVars::bind(tape, CrossModalParams::init(3, 3, rng), false);
  const Var video = tape.constant(oracle::random_matrix(4, 3, rng));
  const Var out = fuse(video, tape.constant(Tensor::zeros({0, 3})), p, 0.4, ForwardMode{});
  EXPECT_EQ(out.id(), video.id());
}

TEST(Crossmodal, EmbedGradientMatchesFiniteDifferences) {
  oracle::Rng rng(7);
  const Tensor probe = oracle::random_matrix(3, 2, rng);
  const auto report = check_gradients(
      [&](Tape&, std::span<const Var> v) { return weighted_sum(embed_tokens(v[0], v[1], v[2]), probe); },
      {oracle::random_matrix(3, 4, rng), oracle::random_matrix(4, 2, rng), oracle::random_matrix(1, 2, rng).reshaped({2})});
  EXPECT_LT(report.max_error, 1e-4);
}

}  // namespace
}  // namespace lgrln
