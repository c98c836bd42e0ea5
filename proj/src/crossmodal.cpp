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

#include "lgrln/crossmodal.hpp"

#include <cmath>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w = Tensor::zeros({rows, cols});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

}  // namespace

CrossModalParams CrossModalParams::init(std::size_t token_dim, std::size_t hidden_dim, Rng& rng) {
  CrossModalParams p;
  p.token_w = uniform_matrix(token_dim, hidden_dim, rng);
  p.token_b = Tensor::zeros({hidden_dim});
  p.value_w = uniform_matrix(hidden_dim, hidden_dim, rng);
  p.value_b = Tensor::zeros({hidden_dim});
  p.query_w = uniform_matrix(hidden_dim, hidden_dim, rng);
  p.query_b = Tensor::zeros({hidden_dim});
  p.key_w = uniform_matrix(hidden_dim, hidden_dim, rng);
  p.key_b = Tensor::zeros({hidden_dim});
  p.update = GbtLayerParams::init(hidden_dim, rng);
  return p;
}

CrossModalVars CrossModalVars::bind(Tape& tape, const CrossModalParams& p, bool trainable) {
  CrossModalVars v;
  v.token_w = tape.leaf(p.token_w, trainable);
  v.token_b = tape.leaf(p.token_b, trainable);
  v.value_w = tape.leaf(p.value_w, trainable);
  v.value_b = tape.leaf(p.value_b, trainable);
  v.query_w = tape.leaf(p.query_w, trainable);
  v.query_b = tape.leaf(p.query_b, trainable);
  v.key_w = tape.leaf(p.key_w, trainable);
  v.key_b = tape.leaf(p.key_b, trainable);
  v.update = GbtLayerVars::bind(tape, p.update, trainable);
  return v;
}

Var embed_tokens(const Var& raw_tokens, const Var& w, const Var& b) {
  if (raw_tokens.shape().size() != 2 || raw_tokens.shape()[1] == 0) {
    throw DimensionError("token features must be L x D_t with D_t > 0, got " +
                         shape_string(raw_tokens.shape()));
  }
  return linear(raw_tokens, w, b);
}

Var token_attention(const Var& video, const Var& tokens, const CrossModalVars& p) {
  Var queries = linear(video, p.query_w, p.query_b);
  Var keys = linear(tokens, p.key_w, p.key_b);
  if (queries.shape()[1] != keys.shape()[1]) {
    throw DimensionError("projected query width " + shape_string(queries.shape()) +
                         " differs from key width " + shape_string(keys.shape()));
  }
  return softmax_rows(matmul(queries, transpose(keys)));
}

Var token_messages(const Var& video, const Var& tokens, const CrossModalVars& p) {
  Var attention = token_attention(video, tokens, p);
  Var values = linear(tokens, p.value_w, p.value_b);
  return matmul(attention, values);
}

Var fuse(const Var& video, const Var& tokens, const CrossModalVars& p, double dropout_rate,
         ForwardMode mode) {
  if (tokens.shape().size() != 2) {
    throw DimensionError("tokens must be a matrix, got " + shape_string(tokens.shape()));
  }
  if (tokens.shape()[0] == 0) return video;
  if (tokens.shape()[1] != video.shape().at(1)) {
    throw DimensionError("token width " + shape_string(tokens.shape()) +
                         " does not match video features " + shape_string(video.shape()));
  }
  return iterate_node_state(video, token_messages(video, tokens, p), p.update, dropout_rate, mode);
}

}  // namespace lgrln
