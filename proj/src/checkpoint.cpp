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

#include "lgrln/checkpoint.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "lgrln/error.hpp"
#include "lgrln/lgrt.hpp"

namespace lgrln {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "lgrln-checkpoint";
constexpr int kVersion = 1;

json model_config_json(const ModelConfig& c) {
  json j;
  j["input_dim"] = c.input_dim;
  j["token_dim"] = c.token_dim;
  j["tau1"] = c.gbt.tau1;
  j["tau2"] = c.gbt.tau2;
  j["alpha1"] = c.gbt.alpha1;
  j["alpha2"] = c.gbt.alpha2;
  j["hidden_dim"] = c.gbt.hidden_dim;
  j["n_layers"] = c.gbt.n_layers;
  j["dropout_rate"] = c.gbt.dropout_rate;
  j["time_embed_layers"] = c.gbt.time_embed_layers;
  j["max_positions"] = c.gbt.max_positions;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.token_dim = j.at("token_dim").get<std::size_t>();
  c.gbt.tau1 = j.at("tau1").get<double>();
  c.gbt.tau2 = j.at("tau2").get<double>();
  c.gbt.alpha1 = j.at("alpha1").get<double>();
  c.gbt.alpha2 = j.at("alpha2").get<double>();
  c.gbt.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.gbt.n_layers = j.at("n_layers").get<std::size_t>();
  c.gbt.dropout_rate = j.at("dropout_rate").get<double>();
  c.gbt.time_embed_layers = j.at("time_embed_layers").get<std::set<std::size_t>>();
  c.gbt.max_positions = j.at("max_positions").get<std::size_t>();
  return c;
}

}  // namespace

fs::path save_checkpoint(const fs::path& dir, const Model& model, const TrainConfig* config) {
  fs::create_directories(dir);
  json params = json::array();
  for (const auto& [name, tensor] : model.params.named()) {
    const std::string blob = name + ".lgrt";
    write_file_atomic(dir / blob, encode_lgrt(*tensor, DType::kF64));
    params.push_back({{"name", name}, {"blob", blob}, {"shape", tensor->shape()}});
  }
  json root;
  root["format"] = kFormat;
  root["version"] = kVersion;
  root["model"] = model_config_json(model.config);
  if (config) root["config"] = json::parse(config->to_json());
  root["parameters"] = std::move(params);
  const fs::path manifest = dir / "checkpoint.json";
  write_file_atomic(manifest, root.dump(2) + "\n");
  return manifest;
}

Checkpoint load_checkpoint(const fs::path& path) {
  const fs::path manifest = fs::is_directory(path) ? path / "checkpoint.json" : path;
  const fs::path dir = manifest.parent_path();
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint manifest " + manifest.string());

  Checkpoint ck;
  json root;
  try {
    root = json::parse(in);
    if (root.at("format").get<std::string>() != kFormat || root.at("version").get<int>() != kVersion) {
      throw CheckpointError(manifest.string() + ": unsupported format or version");
    }
    ck.model.config = model_config_from_json(root.at("model"));
    ck.model.config.validate();
  } catch (const json::exception& e) {
    throw CheckpointError(manifest.string() + ": malformed manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(manifest.string() + ": invalid model config: " + e.what());
  }
  if (root.contains("config")) {
    try {
      ck.config = TrainConfig::from_json(root["config"].dump());
    } catch (const ConfigError& e) {
      throw CheckpointError(manifest.string() + ": invalid training config: " + e.what());
    }
  }

  ck.model.params = ModelParams::init(ck.model.config, 0);
  auto named = ck.model.params.named();
  const json& entries = root.at("parameters");
  if (!entries.is_array() || entries.size() != named.size()) {
    throw CheckpointError(manifest.string() + ": expected " + std::to_string(named.size()) + " parameters");
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, tensor] = named[i];
    const json& e = entries[i];
    if (!e.contains("name") || e["name"] != name) {
      throw CheckpointError(manifest.string() + ": parameter " + std::to_string(i) + " should be " + name);
    }
    Blob blob;
    try {
      blob = read_lgrt(dir / e.at("blob").get<std::string>());
    } catch (const LoadError& err) {
      throw CheckpointError(std::string("parameter ") + name + ": " + err.what());
    }
    if (blob.tensor.shape() != tensor->shape()) {
      throw CheckpointError("parameter " + name + ": blob shape " + shape_string(blob.tensor.shape()) +
                            " differs from model shape " + shape_string(tensor->shape()));
    }
    *tensor = std::move(blob.tensor);
  }
  return ck;
}

}  // namespace lgrln
