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

#include "lgrln/graphgen.hpp"

#include <numeric>

#include <json.hpp>

#include "lgrln/error.hpp"

namespace lgrln {

namespace {

void check_rates(double fps, double tau) {
  if (!(fps > 0.0)) throw ConfigError("fps must be positive, got " + std::to_string(fps));
  if (!(tau > 0.0)) throw ConfigError("graph tau must be positive, got " + std::to_string(tau));
}

// `interval(i, j)` is the non-negative time gap for i < j and must be
// non-decreasing in j, which lets the scan stop at the first miss.
template <typename Interval>
void link_frames(VideoGraphs& g, double tau, Interval interval) {
  const std::size_t n = g.n_frames;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(interval(i, j) < tau)) break;
      g.edges_forward.emplace_back(i, j);
      g.edges_backward.emplace_back(j, i);
      g.edges_undirected.emplace_back(i, j);
    }
  }
}

}  // namespace

VideoGraphs build_graphs(std::size_t n_frames, double fps, double tau) {
  std::vector<std::size_t> positions(n_frames);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  return build_graphs(std::move(positions), fps, tau);
}

VideoGraphs build_graphs(std::vector<std::size_t> positions, double fps, double tau) {
  check_rates(fps, tau);
  if (positions.empty()) throw ConfigError("a video needs at least one frame");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] < positions[i - 1]) throw ConfigError("frame positions must be non-decreasing");
  }
  VideoGraphs g;
  g.n_frames = positions.size();
  g.fps = fps;
  g.positions = std::move(positions);
  const auto& pos = g.positions;
  link_frames(g, tau, [&](std::size_t i, std::size_t j) {
    return static_cast<double>(pos[j] - pos[i]) / fps;
  });
  return g;
}

VideoGraphs build_graphs_from_timestamps(std::span<const double> seconds, double fps, double tau) {
  check_rates(fps, tau);
  if (seconds.empty()) throw ConfigError("a video needs at least one frame");
  for (std::size_t i = 1; i < seconds.size(); ++i) {
    if (seconds[i] < seconds[i - 1]) throw ConfigError("timestamps must be non-decreasing");
  }
  VideoGraphs g;
  g.n_frames = seconds.size();
  g.fps = fps;
  g.positions.resize(g.n_frames);
  std::iota(g.positions.begin(), g.positions.end(), std::size_t{0});
  link_frames(g, tau, [&](std::size_t i, std::size_t j) { return seconds[j] - seconds[i]; });
  return g;
}

NeighborLists incoming_neighbors(std::size_t n_nodes, std::span<const Edge> edges) {
  NeighborLists out(n_nodes);
  for (const auto& [s, t] : edges) out.at(t).push_back(s);
  return out;
}

NeighborLists symmetric_neighbors(std::size_t n_nodes, std::span<const Edge> edges) {
  NeighborLists out(n_nodes);
  for (const auto& [a, b] : edges) {
    out.at(a).push_back(b);
    out.at(b).push_back(a);
  }
  return out;
}

BranchNeighbors branch_neighbors(const VideoGraphs& graphs) {
  return BranchNeighbors{
      incoming_neighbors(graphs.n_frames, graphs.edges_forward),
      incoming_neighbors(graphs.n_frames, graphs.edges_backward),
      symmetric_neighbors(graphs.n_frames, graphs.edges_undirected),
  };
}

std::string graphs_to_json(const VideoGraphs& graphs) {
  nlohmann::json j;
  j["n_frames"] = graphs.n_frames;
  j["fps"] = graphs.fps;
  j["positions"] = graphs.positions;
  j["forward"] = graphs.edges_forward;
  j["backward"] = graphs.edges_backward;
  j["undirected"] = graphs.edges_undirected;
  return j.dump();
}

}  // namespace lgrln
