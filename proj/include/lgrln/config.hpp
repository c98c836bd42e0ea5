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
#include <cstdint>
#include <optional>
#include <string>

#include "lgrln/emloss.hpp"
#include "lgrln/gbt.hpp"
#include "lgrln/optim.hpp"
#include "lgrln/postproc.hpp"

namespace lgrln {

enum class LossMode { kBiased, kMean };

/// Training and inference settings.
///
/// Serialized as a flat JSON object whose keys are listed in
/// TrainConfig::keys(); unknown keys are rejected.
struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double dropout_rate = 0.4;
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  double budget_ratio = 0.15;

  // Temporal edge threshold in seconds. When unset each video uses
  // (forward_neighbors + 0.5) / fps, i.e. that many forward neighbors.
  std::optional<double> graph_tau;
  std::size_t forward_neighbors = 4;

  GbtConfig gbt;
  std::size_t token_dim = 768;
  BceConfig loss;
  LossMode loss_mode = LossMode::kBiased;

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  std::size_t kts_max_changes = 0;  // 0: n_frames / 10
  double kts_penalty = 1.0;         // multiplied by the Gram matrix's mean diagonal
  KernelSpec kts_kernel;
  bool use_dataset_change_points = true;

  std::size_t eval_every = 1;  // epochs between evaluation rows; 0 disables

  // `allow_zero_lr` admits learning_rate == 0, a null update used by tests.
  void validate(bool allow_zero_lr = false) const;
  double tau_for(double fps) const;
  AdamWConfig optimizer() const;

  static TrainConfig from_json(const std::string& text);
  static TrainConfig load(const std::string& path);
  std::string to_json() const;
};

}  // namespace lgrln
