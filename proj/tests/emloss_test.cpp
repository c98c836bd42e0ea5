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

#include <cmath>
#include <numeric>
#include <optional>

#include <gtest/gtest.h>

#include "lgrln/emloss.hpp"
#include "lgrln/error.hpp"
#include "lgrln/gradcheck.hpp"
#include "oracles.hpp"

namespace lgrln {
namespace {

AnnotationSet labels(std::initializer_list<std::initializer_list<double>> rows) {
  AnnotationSet a;
  a.labels = Tensor::matrix(rows);
  return a;
}

AnnotationSet random_labels(std::size_t m, std::size_t n, oracle::Rng& rng) {
  AnnotationSet a;
  a.labels = Tensor::zeros({m, n});
  for (double& v : a.labels.data()) v = static_cast<double>(rng() % 2);
  return a;
}

TEST(Loglik, PerfectFitAndHalf) {
  const std::vector<double> y = {1, 0, 1, 1};
  EXPECT_NEAR(annotation_loglik(y, y), 4 * std::log(1 - kProbabilityClamp), 1e-15);
  const std::vector<double> half(4, 0.5);
  EXPECT_NEAR(annotation_loglik(half, y), 4 * std::log(0.5), 1e-15);
}

TEST(Loglik, HandCase) {
  const std::vector<double> p = {0.9, 0.1}, y = {1, 0};
  EXPECT_NEAR(annotation_loglik(p, y), -0.210721031315652602455002, 1e-15);
}

TEST(EStep, SingleAnnotatorGetsAllWeight) {
  const std::vector<double> p = {0.3, 0.8, 0.6};
  const auto w = e_step(p, labels({{1, 0, 1}}), BceConfig{});
  ASSERT_EQ(w.q.size(), 1u);
  EXPECT_EQ(w.q[0], 1.0);
}

TEST(EStep, TwoAnnotatorHandCase) {
  const std::vector<double> p = {0.9, 0.1};
  BceConfig cfg;
  cfg.a = 0.2;
  cfg.b = 0.8;
  const auto w = e_step(p, labels({{1, 0}, {0, 1}}), cfg);
  EXPECT_EQ(w.subset, std::vector<std::size_t>{0});
  EXPECT_NEAR(w.q[0], 0.8, 1e-15);
  EXPECT_NEAR(w.q[1], 0.2, 1e-15);
}

TEST(EStep, MatchesExhaustiveSubsetSearch) {
  oracle::Rng rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 6, n = 8, size = 1 + rng() % m;
    const auto p = oracle::random_vector(n, rng, 0.01, 0.99);
    const AnnotationSet ann = random_labels(m, n, rng);
    BceConfig cfg;
    cfg.subset_size = size;
    const auto w = e_step(p, ann, cfg);
    std::vector<double> ll(m);
    for (std::size_t k = 0; k < m; ++k) ll[k] = oracle::loglik(p, ann.labels.row(k), kProbabilityClamp);
    const auto best = oracle::best_subset(ll, size);
    double got = 0.0, want = 0.0;
    for (std::size_t k : w.subset) got += ll[k];
    for (std::size_t k : best) want += ll[k];
    EXPECT_EQ(got, want);
    EXPECT_NEAR(std::accumulate(w.q.begin(), w.q.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(EStep, TiesGoToLowerIndex) {
  const std::vector<double> p = {0.6, 0.6};
  const auto w = e_step(p, labels({{1, 0}, {1, 0}, {1, 0}}), BceConfig{});
  EXPECT_EQ(w.subset, std::vector<std::size_t>{0});
}

TEST(EStep, WeightStructure) {
  oracle::Rng rng(32);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t m = 1 + rng() % 5;
    const auto p = oracle::random_vector(6, rng, 0.0, 1.0);
    BceConfig cfg;
    cfg.subset_size = 1 + rng() % m;
    const auto w = e_step(p, random_labels(m, 6, rng), cfg);
    ASSERT_EQ(w.subset.size(), cfg.subset_size);
    const double inside = w.q[w.subset[0]];
    std::optional<double> outside;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::find(w.subset.begin(), w.subset.end(), k) != w.subset.end()) {
        EXPECT_EQ(w.q[k], inside);
      } else {
        if (!outside) outside = w.q[k];
        EXPECT_EQ(w.q[k], *outside);
        EXPECT_LT(w.q[k], inside);
      }
    }
  }
}

TEST(EStep, SubsetInvariantUnderMonotoneTransformOfLogliks) {
  oracle::Rng rng(33);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t m = 5;
    const auto p = oracle::random_vector(7, rng, 0.05, 0.95);
    const AnnotationSet ann = random_labels(m, 7, rng);
    BceConfig cfg;
    cfg.subset_size = 2;
    const auto ll = annotation_logliks(p, ann);
    std::vector<double> transformed(m);
    for (std::size_t k = 0; k < m; ++k) transformed[k] = std::exp(ll[k]) * 3.0 + 1.0;
    EXPECT_EQ(e_step(p, ann, cfg).subset, oracle::best_subset(transformed, 2));
  }
}

TEST(BiasedBce, ConcentratedMixtureIsPlainCrossEntropy) {
  const std::vector<double> p = {0.2, 0.7, 0.9};
  const AnnotationSet ann = labels({{1, 1, 0}, {0, 1, 1}});
  BceConfig cfg;
  cfg.a = 0.0;
  cfg.b = 0.5;
  const auto w = e_step(p, ann, cfg);
  const std::size_t k = w.subset[0];
  EXPECT_EQ(w.q[k], 1.0);
  EXPECT_NEAR(biased_bce(p, ann, w), -annotation_loglik(p, ann.annotation(k)), 1e-15);
}

TEST(BiasedBce, EqualsSoftLabelCrossEntropy) {
  oracle::Rng rng(34);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 1 + rng() % 6, n = 1 + rng() % 15;
    const auto p = oracle::random_vector(n, rng, 0.0, 1.0);
    const AnnotationSet ann = random_labels(m, n, rng);
    BceConfig cfg;
    cfg.subset_size = 1 + rng() % m;
    const auto w = e_step(p, ann, cfg);
    EXPECT_NEAR(biased_bce(p, ann, w), oracle::soft_label_ce(p, ann.labels, w.q, kProbabilityClamp), 1e-12);
  }
}

TEST(BiasedBce, GradientMatchesFiniteDifferences) {
  oracle::Rng rng(35);
  const auto p = oracle::random_vector(9, rng, 0.05, 0.95);
  const AnnotationSet ann = random_labels(4, 9, rng);
  BceConfig cfg;
  cfg.subset_size = 2;
  const auto w = e_step(p, ann, cfg);
  const auto report = check_gradients([&](Tape&, std::span<const Var> v) { return biased_bce(v[0], ann, w); },
                                      {Tensor::vector(p)});
  EXPECT_LT(report.max_error, 1e-4);
}

TEST(BiasedBce, ClampKeepsSaturatedLossFinite) {
  const std::vector<double> p = {0.0, 1.0};
  const AnnotationSet ann = labels({{1, 0}});
  const auto w = e_step(p, ann, BceConfig{});
  EXPECT_TRUE(std::isfinite(biased_bce(p, ann, w)));
  Tape tape;
  const Var pv = tape.parameter(Tensor::vector(p));
  const GradMap g = tape.backward(biased_bce(pv, ann, w));
  EXPECT_EQ(g.at(pv), Tensor::zeros({2}));
}

TEST(MeanLabelBce, IdenticalAnnotationsMatchAnyMixture) {
  const std::vector<double> p = {0.3, 0.6, 0.8};
  const AnnotationSet ann = labels({{1, 0, 1}, {1, 0, 1}, {1, 0, 1}});
  BceConfig cfg;
  cfg.subset_size = 2;
  EXPECT_NEAR(mean_label_bce(p, ann), biased_bce(p, ann, e_step(p, ann, cfg)), 1e-14);
}

TEST(MeanLabelBce, DisagreeingPairAveragesToHalf) {
  const AnnotationSet ann = labels({{1, 0}, {0, 1}});
  EXPECT_EQ(mean_labels(ann), (std::vector<double>{0.5, 0.5}));
}

TEST(MeanLabelBce, EqualsUniformMixture) {
  oracle::Rng rng(36);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 1 + rng() % 6, n = 1 + rng() % 15;
    const auto p = oracle::random_vector(n, rng, 0.0, 1.0);
    const AnnotationSet ann = random_labels(m, n, rng);
    const auto w = mixture_from_subset(m, {0}, 0.3, 0.3);
    EXPECT_NEAR(biased_bce(p, ann, w), mean_label_bce(p, ann), 1e-12);
  }
}

TEST(MeanLabelBce, GradientMatchesFiniteDifferences) {
  oracle::Rng rng(37);
  const AnnotationSet ann = random_labels(3, 6, rng);
  const auto report = check_gradients([&](Tape&, std::span<const Var> v) { return mean_label_bce(v[0], ann); },
                                      {Tensor::vector(oracle::random_vector(6, rng, 0.05, 0.95))});
  EXPECT_LT(report.max_error, 1e-4);
}

TEST(Validation, RejectsBadInputs) {
  EXPECT_THROW(labels({{1, 2}}).validate(2), ContractError);
  EXPECT_THROW(labels({{1, 0}}).validate(3), DimensionError);
  BceConfig cfg;
  cfg.a = 0.5;
  cfg.b = 0.5;
  EXPECT_THROW(cfg.validate(2), ConfigError);
  cfg = BceConfig{};
  cfg.subset_size = 3;
  EXPECT_THROW(cfg.validate(2), ConfigError);
  EXPECT_THROW(mixture_from_subset(2, {2}, 0.1, 0.2), ContractError);
}

}  // namespace
}  // namespace lgrln
