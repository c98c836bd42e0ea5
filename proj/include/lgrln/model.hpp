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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lgrln/autodiff.hpp"
#include "lgrln/crossmodal.hpp"
#include "lgrln/gbt.hpp"
#include "lgrln/graphgen.hpp"

namespace lgrln {

struct ModelConfig {
  std::size_t input_dim = 1024;
  std::size_t token_dim = 768;
  GbtConfig gbt;

  void validate() const;
};

enum class Branch : std::size_t { kForward = 0, kBackward = 1, kUndirected = 2 };

/// All trainable tensors of the network.
///
/// The three branches share the input projection and the time-embedding
/// table; each owns its own stack of gbt layers.
struct ModelParams {
  Tensor input_w, input_b;
  Tensor time_table;
  std::array<std::vector<GbtLayerParams>, 3> branches;
  Tensor head_w, head_b;
  CrossModalParams crossmodal;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  // Stable (name, tensor) enumeration used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::size_t parameter_count() const;
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

/// How one video is turned into graphs.
struct GraphSpec {
  double fps = 1.0;
  double tau = 1.0;
  std::optional<std::vector<double>> timestamps;  // overrides positions / fps
};

VideoGraphs make_graphs(std::size_t n_frames, const GraphSpec& spec);

struct ForwardPass {
  Var logits;
  Var probs;
  VideoGraphs graphs;
  std::vector<Var> params;  // aligned with ModelParams::named()
};

// Projection -> language fusion (when tokens are given and non-empty) ->
// graph generation -> three gbt branches -> summed scoring head.
ForwardPass forward(Tape& tape, const Model& model, const Tensor& features, const Tensor* query_tokens,
                    const GraphSpec& graphs, ForwardMode mode, bool trainable);

// Eval-mode per-frame probabilities.
std::vector<double> predict(const Model& model, const Tensor& features, const Tensor* query_tokens,
                            const GraphSpec& graphs);

}  // namespace lgrln
