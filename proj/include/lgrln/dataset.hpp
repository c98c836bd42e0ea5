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
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lgrln/emloss.hpp"
#include "lgrln/tensor.hpp"

namespace lgrln {

struct Video {
  std::string id;
  std::size_t n_frames = 0;
  double fps = 1.0;
  Tensor features;  // [n_frames x D]
  AnnotationSet annotations;
  std::optional<std::vector<std::size_t>> change_points;
  std::optional<std::vector<double>> timestamps;  // seconds, one per frame
  std::string query_text;
  std::optional<Tensor> query_tokens;  // [L x D_t]
  // Frame range [begin, end) the query refers to, when known.
  std::optional<std::pair<std::size_t, std::size_t>> query_scene;

  bool has_query() const { return query_tokens && query_tokens->extent(0) > 0; }
  std::vector<double> mean_importance() const;
};

struct Dataset {
  std::vector<Video> videos;

  bool empty() const { return videos.empty(); }
  std::size_t size() const { return videos.size(); }
  // 0 when empty.
  std::size_t feature_dim() const;
  // Width of the query blobs, if any video carries one.
  std::optional<std::size_t> token_dim() const;
  const Video& find(const std::string& id) const;
};

// Reads a manifest and its blobs. Blob paths are relative to the manifest's
// directory. Any violation throws LoadError naming the video and field.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Writes manifest.json plus one blob per tensor into `dir`. Features and
// importance are stored as f64, annotations as u8.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

void validate_video(const Video& video);

struct SynthOptions {
  std::size_t n_videos = 10;
  std::size_t min_frames = 60;
  std::size_t max_frames = 120;
  std::size_t n_scenes = 10;
  std::size_t n_annotators = 3;
  std::size_t feature_dim = 32;
  double noise = 0.3;
  double fps = 2.0;
  double label_budget = 0.15;
  std::uint64_t seed = 0;
  bool with_queries = false;
  std::size_t query_tokens = 3;
  double query_noise = 0.1;

  void validate() const;
};

// Piecewise-constant scene features with annotators that disagree
// systematically. Scene boundaries are stored as change points.
Dataset synth_dataset(const SynthOptions& options);

}  // namespace lgrln
