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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lgrln/config.hpp"
#include "lgrln/dataset.hpp"
#include "lgrln/model.hpp"
#include "lgrln/postproc.hpp"

namespace lgrln {

struct LogRow {
  std::size_t epoch = 0;
  std::string split;  // "train", or "fold<k>" during cross-validation
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> f1_max;
  std::optional<double> f1_mean;

  std::string to_json() const;
};

using LogCallback = std::function<void(const LogRow&)>;

struct TrainResult {
  Model model;
  std::vector<LogRow> log;
};

ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& cfg);
GraphSpec graph_spec_for(const Video& video, const TrainConfig& cfg);

// Per-video objective: the biased loss under `weights`, or the mean-label
// loss, divided by the frame count.
Var video_loss(const Var& probs, const Video& video, const MixtureWeights& weights, const TrainConfig& cfg);

// One optimizer step per video, videos shuffled each epoch. The mixture
// weights are refreshed once per epoch from eval-mode predictions.
TrainResult train(const Dataset& train_set, const Dataset* val_set, const TrainConfig& cfg,
                  const LogCallback& on_row = {});

// Dataset change points when present and enabled, otherwise KTS on the
// raw features with the penalty scaled by the Gram matrix's mean diagonal.
ShotSegmentation segment_video(const Tensor& features, const std::optional<std::vector<std::size_t>>& change_points,
                               const TrainConfig& cfg);

struct Inference {
  std::vector<double> probs;
  ShotSegmentation segmentation;
  SummarySelection summary;
};

Inference infer(const Model& model, const Tensor& features, const Tensor* query_tokens, const GraphSpec& graphs,
                const std::optional<std::vector<std::size_t>>& change_points, const TrainConfig& cfg);

struct VideoEval {
  std::string id;
  double loss = 0.0;
  double f1_max = 0.0;
  double f1_mean = 0.0;
  std::optional<double> tau;  // unset when a correlation is undefined
  std::optional<double> rho;

  std::string to_json() const;
};

struct EvalReport {
  std::vector<VideoEval> videos;
  double loss = 0.0;
  double f1_max = 0.0;
  double f1_mean = 0.0;
  std::optional<double> tau;  // mean over videos where defined
  std::optional<double> rho;

  std::string to_json() const;
};

EvalReport evaluate(const Model& model, const Dataset& dataset, const TrainConfig& cfg);

// Fold index per video (dataset order). Depends only on the seed and the
// set of ids; fold sizes differ by at most one.
std::vector<std::size_t> fold_assignment(const Dataset& dataset, std::size_t folds, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> test_ids;
  EvalReport report;
};

struct CrossvalReport {
  std::vector<FoldResult> folds;
  double f1_max = 0.0;
  double f1_mean = 0.0;
  std::optional<double> tau;
  std::optional<double> rho;
  std::vector<LogRow> log;

  std::string to_json() const;
};

CrossvalReport crossval(const Dataset& dataset, const TrainConfig& cfg, const LogCallback& on_row = {});

}  // namespace lgrln
