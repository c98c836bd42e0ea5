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
#include <string>
#include <vector>

namespace lgrln {

inline constexpr double kGradSuiteTolerance = 1e-4;

struct GradSuiteEntry {
  std::string op;
  std::size_t instances = 0;
  std::size_t rejected = 0;  // draws discarded for sitting near a threshold
  double max_error = 0.0;
  double seconds = 0.0;

  bool passed() const { return max_error < kGradSuiteTolerance; }
};

// Finite-difference checks of every trainable operation on random small
// instances: gbt_layer, graph_norm, time_embedding, crossmodal_fuse,
// scoring_head and biased_bce.
std::vector<GradSuiteEntry> run_gradient_suite(std::size_t instances = 20, std::uint64_t seed = 0);

}  // namespace lgrln
