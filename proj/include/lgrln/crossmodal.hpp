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

#include "lgrln/autodiff.hpp"
#include "lgrln/gbt.hpp"

namespace lgrln {

/// Parameters of the text-to-video fusion layer.
///
/// Every token node has a directed edge to every video node and no other
/// edges are used, so the layer is attention over tokens followed by the
/// same residual iteration function as a gbt layer.
struct CrossModalParams {
  Tensor token_w, token_b;  // raw token width -> hidden width
  Tensor value_w, value_b;
  Tensor query_w, query_b;
  Tensor key_w, key_b;
  GbtLayerParams update;

  static CrossModalParams init(std::size_t token_dim, std::size_t hidden_dim, Rng& rng);
};

struct CrossModalVars {
  Var token_w, token_b;
  Var value_w, value_b;
  Var query_w, query_b;
  Var key_w, key_b;
  GbtLayerVars update;

  static CrossModalVars bind(Tape& tape, const CrossModalParams& p, bool trainable);
};

// Affine projection of raw token features [L x D_t] to the hidden width.
Var embed_tokens(const Var& raw_tokens, const Var& w, const Var& b);

// Row-stochastic attention [n x L] of video nodes over tokens. Logits are
// the unscaled dot products of projected queries and keys.
Var token_attention(const Var& video, const Var& tokens, const CrossModalVars& p);

// Attention-weighted sum of projected token values, one row per video node.
Var token_messages(const Var& video, const Var& tokens, const CrossModalVars& p);

// Fuses projected tokens [L x H] into video features [n x H]. With L = 0 the
// input Var is returned unchanged.
Var fuse(const Var& video, const Var& tokens, const CrossModalVars& p, double dropout_rate,
         ForwardMode mode);

}  // namespace lgrln
