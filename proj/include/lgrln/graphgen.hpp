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
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lgrln {

using Edge = std::pair<std::size_t, std::size_t>;  // (source, target)
using NeighborLists = std::vector<std::vector<std::size_t>>;

/// Forward, backward and undirected temporal graphs over the frames of one
/// video. Two frames are linked when their time interval is strictly below
/// the threshold; graph construction never looks at feature values.
struct VideoGraphs {
  std::size_t n_frames = 0;
  std::vector<std::size_t> positions;  // frame index of each node
  double fps = 1.0;
  std::vector<Edge> edges_forward;     // earlier -> later
  std::vector<Edge> edges_backward;    // later -> earlier
  std::vector<Edge> edges_undirected;  // stored once as (i, j), i < j
};

// Uniformly sampled frames: node i sits at position i, time i / fps.
VideoGraphs build_graphs(std::size_t n_frames, double fps, double tau);

// Frames at arbitrary non-decreasing positions, time positions[i] / fps.
VideoGraphs build_graphs(std::vector<std::size_t> positions, double fps, double tau);

// Explicit per-frame timestamps in seconds (non-decreasing). Positions are
// the node indices; fps is recorded for reference only.
VideoGraphs build_graphs_from_timestamps(std::span<const double> seconds, double fps, double tau);

// Per-node message sources: for edge (s, t), t receives from s.
NeighborLists incoming_neighbors(std::size_t n_nodes, std::span<const Edge> edges);
// Both endpoints of every undirected pair see each other.
NeighborLists symmetric_neighbors(std::size_t n_nodes, std::span<const Edge> edges);

struct BranchNeighbors {
  NeighborLists forward;
  NeighborLists backward;
  NeighborLists undirected;
};

BranchNeighbors branch_neighbors(const VideoGraphs& graphs);

// Debug dump: {"n_frames", "fps", "positions", "forward", "backward", "undirected"}.
std::string graphs_to_json(const VideoGraphs& graphs);

}  // namespace lgrln
