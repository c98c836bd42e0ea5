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

#include "lgrln/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lgrln/error.hpp"
#include "lgrln/gbt.hpp"
#include "lgrln/lgrt.hpp"
#include "lgrln/postproc.hpp"

namespace lgrln {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> Video::mean_importance() const {
  const std::size_t m = annotations.annotators();
  std::vector<double> mean(n_frames, 0.0);
  const Tensor& src = annotations.importance ? *annotations.importance : annotations.labels;
  for (std::size_t k = 0; k < m; ++k) {
    const auto row = src.row(k);
    for (std::size_t t = 0; t < n_frames; ++t) mean[t] += row[t];
  }
  for (double& v : mean) v /= static_cast<double>(m);
  return mean;
}

std::size_t Dataset::feature_dim() const {
  return videos.empty() ? 0 : videos.front().features.extent(1);
}

std::optional<std::size_t> Dataset::token_dim() const {
  for (const auto& v : videos) {
    if (v.query_tokens) return v.query_tokens->extent(1);
  }
  return std::nullopt;
}

const Video& Dataset::find(const std::string& id) const {
  for (const auto& v : videos) {
    if (v.id == id) return v;
  }
  throw LoadError("no video with id '" + id + "'");
}

namespace {

[[noreturn]] void reject(const std::string& id, const std::string& field, const std::string& what) {
  throw LoadError("video '" + id + "' field '" + field + "': " + what);
}

}  // namespace

void validate_video(const Video& v) {
  if (v.id.empty()) throw LoadError("video with empty id");
  if (v.n_frames == 0) reject(v.id, "n_frames", "must be positive");
  if (!(v.fps > 0.0) || !std::isfinite(v.fps)) reject(v.id, "fps", "must be positive");
  if (v.features.rank() != 2 || v.features.extent(0) != v.n_frames || v.features.extent(1) == 0) {
    reject(v.id, "features_blob",
           "expected [" + std::to_string(v.n_frames) + " x D], got " + shape_string(v.features.shape()));
  }
  if (!v.features.all_finite()) reject(v.id, "features_blob", "non-finite value");
  try {
    v.annotations.validate(v.n_frames);
  } catch (const Error& e) {
    reject(v.id, "annotations_blob", e.what());
  }
  if (v.change_points) {
    try {
      ShotSegmentation{*v.change_points, v.n_frames}.validate();
    } catch (const Error& e) {
      reject(v.id, "change_points", e.what());
    }
  }
  if (v.timestamps) {
    const auto& ts = *v.timestamps;
    if (ts.size() != v.n_frames) reject(v.id, "timestamps", "length differs from n_frames");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (!std::isfinite(ts[i]) || (i > 0 && ts[i] < ts[i - 1])) {
        reject(v.id, "timestamps", "must be finite and non-decreasing");
      }
    }
  }
  if (v.query_tokens) {
    if (v.query_tokens->rank() != 2 || v.query_tokens->extent(1) == 0) {
      reject(v.id, "query_blob", "expected [L x D_t], got " + shape_string(v.query_tokens->shape()));
    }
    if (!v.query_tokens->all_finite()) reject(v.id, "query_blob", "non-finite value");
  }
  if (v.query_scene) {
    const auto [b, e] = *v.query_scene;
    if (!(b < e && e <= v.n_frames)) reject(v.id, "query_scene", "range outside the video");
  }
}

namespace {

Tensor read_blob(const fs::path& base, const json& entry, const std::string& id, const std::string& field,
                 bool want_u8) {
  if (!entry.contains(field) || !entry[field].is_string()) reject(id, field, "missing blob path");
  const fs::path path = base / entry[field].get<std::string>();
  Blob blob;
  try {
    blob = read_lgrt(path);
  } catch (const LoadError& e) {
    reject(id, field, e.what());
  }
  if (want_u8 && blob.dtype != DType::kU8) reject(id, field, path.string() + " must be u8");
  if (!want_u8 && blob.dtype == DType::kU8) reject(id, field, path.string() + " must be floating point");
  if (blob.tensor.rank() != 2) {
    reject(id, field, path.string() + " must be a matrix, got " + shape_string(blob.tensor.shape()));
  }
  return std::move(blob.tensor);
}

template <typename T>
T field_as(const json& entry, const std::string& id, const std::string& field) {
  try {
    return entry.at(field).get<T>();
  } catch (const json::exception&) {
    reject(id, field, "missing or has the wrong type");
  }
}

}  // namespace

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw LoadError("cannot open dataset manifest " + manifest_path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw LoadError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  if (!root.is_object() || !root.contains("videos") || !root["videos"].is_array()) {
    throw LoadError(manifest_path.string() + ": expected an object with a 'videos' array");
  }
  const fs::path base = manifest_path.parent_path();

  Dataset ds;
  std::set<std::string> seen;
  for (const auto& entry : root["videos"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string()) {
      throw LoadError(manifest_path.string() + ": video entry without a string id");
    }
    Video v;
    v.id = entry["id"].get<std::string>();
    if (!seen.insert(v.id).second) reject(v.id, "id", "duplicate");
    v.n_frames = field_as<std::size_t>(entry, v.id, "n_frames");
    v.fps = field_as<double>(entry, v.id, "fps");
    v.features = read_blob(base, entry, v.id, "features_blob", false);
    v.annotations.labels = read_blob(base, entry, v.id, "annotations_blob", true);
    if (entry.contains("importance_blob")) {
      v.annotations.importance = read_blob(base, entry, v.id, "importance_blob", false);
    }
    if (entry.contains("change_points")) {
      v.change_points = field_as<std::vector<std::size_t>>(entry, v.id, "change_points");
    }
    if (entry.contains("timestamps")) {
      v.timestamps = field_as<std::vector<double>>(entry, v.id, "timestamps");
    }
    if (entry.contains("query_text")) v.query_text = field_as<std::string>(entry, v.id, "query_text");
    if (entry.contains("query_blob")) v.query_tokens = read_blob(base, entry, v.id, "query_blob", false);
    if (entry.contains("query_scene")) {
      const auto r = field_as<std::vector<std::size_t>>(entry, v.id, "query_scene");
      if (r.size() != 2) reject(v.id, "query_scene", "expected [begin, end]");
      v.query_scene = std::make_pair(r[0], r[1]);
    }
    validate_video(v);
    if (!ds.videos.empty()) {
      if (v.features.extent(1) != ds.feature_dim()) {
        reject(v.id, "features_blob", "feature width " + std::to_string(v.features.extent(1)) +
                                          " differs from " + std::to_string(ds.feature_dim()));
      }
    }
    if (v.query_tokens) {
      if (const auto td = ds.token_dim(); td && *td != v.query_tokens->extent(1)) {
        reject(v.id, "query_blob", "token width differs from earlier videos");
      }
    }
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

fs::path save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  json videos = json::array();
  for (const auto& v : ds.videos) {
    validate_video(v);
    json e;
    e["id"] = v.id;
    e["n_frames"] = v.n_frames;
    e["fps"] = v.fps;
    e["features_blob"] = v.id + ".features.lgrt";
    write_lgrt(dir / (v.id + ".features.lgrt"), v.features, DType::kF64);
    e["annotations_blob"] = v.id + ".annotations.lgrt";
    write_lgrt(dir / (v.id + ".annotations.lgrt"), v.annotations.labels, DType::kU8);
    if (v.annotations.importance) {
      e["importance_blob"] = v.id + ".importance.lgrt";
      write_lgrt(dir / (v.id + ".importance.lgrt"), *v.annotations.importance, DType::kF64);
    }
    if (v.change_points) e["change_points"] = *v.change_points;
    if (v.timestamps) e["timestamps"] = *v.timestamps;
    if (!v.query_text.empty()) e["query_text"] = v.query_text;
    if (v.query_tokens) {
      e["query_blob"] = v.id + ".query.lgrt";
      write_lgrt(dir / (v.id + ".query.lgrt"), *v.query_tokens, DType::kF64);
    }
    if (v.query_scene) e["query_scene"] = {v.query_scene->first, v.query_scene->second};
    videos.push_back(std::move(e));
  }
  json root;
  root["format"] = "lgrln-dataset";
  root["version"] = 1;
  root["videos"] = std::move(videos);
  const fs::path manifest = dir / "manifest.json";
  write_file_atomic(manifest, root.dump(2) + "\n");
  return manifest;
}

void SynthOptions::validate() const {
  if (n_videos == 0) throw ConfigError("synth: n_videos must be positive");
  if (n_scenes == 0) throw ConfigError("synth: n_scenes must be positive");
  if (n_annotators == 0) throw ConfigError("synth: n_annotators must be positive");
  if (feature_dim == 0) throw ConfigError("synth: feature_dim must be positive");
  if (min_frames > max_frames) throw ConfigError("synth: min_frames exceeds max_frames");
  if (min_frames < 2 * n_scenes) throw ConfigError("synth: need at least two frames per scene");
  if (!(fps > 0.0)) throw ConfigError("synth: fps must be positive");
  if (!(noise >= 0.0) || !(query_noise >= 0.0)) throw ConfigError("synth: noise must be non-negative");
  if (!(label_budget > 0.0 && label_budget <= 1.0)) throw ConfigError("synth: label_budget must lie in (0, 1]");
  if (with_queries && query_tokens == 0) throw ConfigError("synth: query_tokens must be positive");
}

namespace {

// Scene lengths of at least two frames, summing to n.
std::vector<std::size_t> scene_lengths(std::size_t n, std::size_t scenes, Rng& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> w(scenes);
  for (double& x : w) x = u(rng);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const std::size_t spare = n - 2 * scenes;
  std::vector<std::size_t> len(scenes);
  std::size_t used = 0;
  for (std::size_t s = 0; s < scenes; ++s) {
    len[s] = 2 + static_cast<std::size_t>(std::floor(static_cast<double>(spare) * w[s] / total));
    used += len[s];
  }
  for (std::size_t s = 0; used < n; s = (s + 1) % scenes, ++used) ++len[s];
  return len;
}

// Whole scenes taken in `order` while they fit the budget.
std::vector<std::size_t> pick_scenes(const std::vector<std::size_t>& order,
                                     const std::vector<std::size_t>& len, std::size_t budget) {
  std::vector<std::size_t> chosen;
  std::size_t used = 0;
  for (std::size_t s : order) {
    if (used + len[s] <= budget) {
      chosen.push_back(s);
      used += len[s];
    }
  }
  return chosen;
}

}  // namespace

Dataset synth_dataset(const SynthOptions& o) {
  o.validate();
  Rng rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = o.feature_dim;

  std::vector<double> interest(d);
  double norm = 0.0;
  for (double& x : interest) {
    x = gauss(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : interest) x /= norm;

  Dataset ds;
  for (std::size_t vi = 0; vi < o.n_videos; ++vi) {
    std::uniform_int_distribution<std::size_t> frames_dist(o.min_frames, o.max_frames);
    const std::size_t n = frames_dist(rng);
    const auto len = scene_lengths(n, o.n_scenes, rng);
    std::vector<std::size_t> begin(o.n_scenes, 0);
    for (std::size_t s = 1; s < o.n_scenes; ++s) begin[s] = begin[s - 1] + len[s - 1];

    Tensor centroids = Tensor::zeros({o.n_scenes, d});
    std::vector<double> score(o.n_scenes, 0.0);
    for (std::size_t s = 0; s < o.n_scenes; ++s) {
      for (std::size_t j = 0; j < d; ++j) {
        centroids(s, j) = gauss(rng);
        score[s] += centroids(s, j) * interest[j];
      }
    }

    Video v;
    char name[32];
    std::snprintf(name, sizeof(name), "video_%03zu", vi);
    v.id = name;
    v.n_frames = n;
    v.fps = o.fps;
    v.features = Tensor::zeros({n, d});
    for (std::size_t s = 0; s < o.n_scenes; ++s) {
      for (std::size_t t = begin[s]; t < begin[s] + len[s]; ++t) {
        for (std::size_t j = 0; j < d; ++j) v.features(t, j) = centroids(s, j) + o.noise * gauss(rng);
      }
    }
    if (o.n_scenes > 1) v.change_points = std::vector<std::size_t>(begin.begin() + 1, begin.end());

    std::optional<std::size_t> query_scene;
    if (o.with_queries) {
      query_scene = std::uniform_int_distribution<std::size_t>(0, o.n_scenes - 1)(rng);
      Tensor tokens = Tensor::zeros({o.query_tokens, d});
      for (std::size_t l = 0; l < o.query_tokens; ++l) {
        for (std::size_t j = 0; j < d; ++j) tokens(l, j) = centroids(*query_scene, j) + o.query_noise * gauss(rng);
      }
      v.query_tokens = std::move(tokens);
      v.query_text = "scene " + std::to_string(*query_scene);
      v.query_scene = std::make_pair(begin[*query_scene], begin[*query_scene] + len[*query_scene]);
    }

    // Candidates: the better-scoring half of the scenes, in temporal order.
    std::vector<std::size_t> by_score(o.n_scenes);
    std::iota(by_score.begin(), by_score.end(), 0);
    std::stable_sort(by_score.begin(), by_score.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<std::size_t> candidates(by_score.begin(), by_score.begin() + (o.n_scenes + 1) / 2);
    std::sort(candidates.begin(), candidates.end());

    const auto budget = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(o.label_budget * static_cast<double>(n))));
    const std::size_t m = o.n_annotators;
    Tensor labels = Tensor::zeros({m, n});
    Tensor importance = Tensor::zeros({m, n});
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<std::size_t> order;
      switch (k % 3) {
        case 0: order = candidates; break;
        case 1: order.assign(candidates.rbegin(), candidates.rend()); break;
        default: order.assign(by_score.begin(), by_score.begin() + candidates.size()); break;
      }
      if (query_scene) {
        order.erase(std::remove(order.begin(), order.end(), *query_scene), order.end());
        order.insert(order.begin(), *query_scene);
      }
      auto chosen = pick_scenes(order, len, budget);
      if (chosen.empty()) {
        // No whole scene fits: keep the leading frames of the first choice.
        for (std::size_t t = 0; t < budget; ++t) labels(k, begin[order.front()] + t) = 1.0;
      }
      for (std::size_t s : chosen) {
        for (std::size_t t = begin[s]; t < begin[s] + len[s]; ++t) labels(k, t) = 1.0;
      }
      for (std::size_t s = 0; s < o.n_scenes; ++s) {
        for (std::size_t t = begin[s]; t < begin[s] + len[s]; ++t) {
          importance(k, t) = sigmoid(2.0 * score[s]) + 0.5 * labels(k, t) + 0.05 * gauss(rng);
        }
      }
    }
    v.annotations.labels = std::move(labels);
    v.annotations.importance = std::move(importance);
    validate_video(v);
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

}  // namespace lgrln
