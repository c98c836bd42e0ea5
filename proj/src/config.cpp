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

#include "lgrln/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lgrln/error.hpp"

namespace lgrln {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

void TrainConfig::validate(bool allow_zero_lr) const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0 || (allow_zero_lr && learning_rate == 0.0))) {
    throw ConfigError("learning_rate must be > 0");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (!(budget_ratio > 0.0 && budget_ratio <= 1.0)) throw ConfigError("budget_ratio must lie in (0, 1]");
  if (graph_tau && !(*graph_tau > 0.0)) throw ConfigError("graph.tau must be positive");
  if (!graph_tau && forward_neighbors == 0) throw ConfigError("graph.forward_neighbors must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (gbt.dropout_rate != dropout_rate) throw ConfigError("gbt dropout differs from dropout_rate");
  gbt.validate();
  if (token_dim == 0) throw ConfigError("model.token_dim must be positive");
  if (!(0.0 <= loss.a && loss.a < loss.b && loss.b < 1.0)) throw ConfigError("loss weights need 0 <= a < b < 1");
  if (loss.subset_size < 1) throw ConfigError("loss.subset_size must be >= 1");
  if (!(kts_penalty >= 0.0)) throw ConfigError("kts.penalty must be >= 0");
  optimizer().validate();
}

double TrainConfig::tau_for(double fps) const {
  if (graph_tau) return *graph_tau;
  return (static_cast<double>(forward_neighbors) + 0.5) / fps;
}

AdamWConfig TrainConfig::optimizer() const {
  AdamWConfig o;
  o.learning_rate = learning_rate;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.eps = eps;
  o.weight_decay = weight_decay;
  return o;
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  TrainConfig c;
  for (const auto& [key, v] : root.items()) {
    if (key == "epochs") c.epochs = get_count(v, key);
    else if (key == "learning_rate") c.learning_rate = get_as<double>(v, key);
    else if (key == "weight_decay") c.weight_decay = get_as<double>(v, key);
    else if (key == "dropout_rate") c.dropout_rate = get_as<double>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "folds") c.folds = get_count(v, key);
    else if (key == "budget_ratio") c.budget_ratio = get_as<double>(v, key);
    else if (key == "graph.tau") c.graph_tau = v.is_null() ? std::nullopt : std::optional<double>(get_as<double>(v, key));
    else if (key == "graph.forward_neighbors") c.forward_neighbors = get_count(v, key);
    else if (key == "gbt.tau1") c.gbt.tau1 = get_as<double>(v, key);
    else if (key == "gbt.tau2") c.gbt.tau2 = get_as<double>(v, key);
    else if (key == "gbt.alpha1") c.gbt.alpha1 = get_as<double>(v, key);
    else if (key == "gbt.alpha2") c.gbt.alpha2 = get_as<double>(v, key);
    else if (key == "gbt.hidden_dim") c.gbt.hidden_dim = get_count(v, key);
    else if (key == "gbt.n_layers") c.gbt.n_layers = get_count(v, key);
    else if (key == "gbt.max_positions") c.gbt.max_positions = get_count(v, key);
    else if (key == "gbt.time_embed_layers") {
      if (!v.is_array()) throw ConfigError("gbt.time_embed_layers must be an array");
      c.gbt.time_embed_layers.clear();
      for (const auto& e : v) c.gbt.time_embed_layers.insert(get_count(e, key));
    }
    else if (key == "model.token_dim") c.token_dim = get_count(v, key);
    else if (key == "loss.a") c.loss.a = get_as<double>(v, key);
    else if (key == "loss.b") c.loss.b = get_as<double>(v, key);
    else if (key == "loss.subset_size") c.loss.subset_size = get_count(v, key);
    else if (key == "loss.mode") {
      const auto mode = get_as<std::string>(v, key);
      if (mode == "biased") c.loss_mode = LossMode::kBiased;
      else if (mode == "mean") c.loss_mode = LossMode::kMean;
      else throw ConfigError("loss.mode must be 'biased' or 'mean', got '" + mode + "'");
    }
    else if (key == "optim.beta1") c.beta1 = get_as<double>(v, key);
    else if (key == "optim.beta2") c.beta2 = get_as<double>(v, key);
    else if (key == "optim.eps") c.eps = get_as<double>(v, key);
    else if (key == "kts.max_changes") c.kts_max_changes = get_count(v, key);
    else if (key == "kts.penalty") c.kts_penalty = get_as<double>(v, key);
    else if (key == "kts.kernel") {
      const auto kind = get_as<std::string>(v, key);
      if (kind == "linear") c.kts_kernel.kind = KernelKind::kLinear;
      else if (kind == "rbf") c.kts_kernel.kind = KernelKind::kRbf;
      else throw ConfigError("kts.kernel must be 'linear' or 'rbf', got '" + kind + "'");
    }
    else if (key == "kts.rbf_gamma") c.kts_kernel.rbf_gamma = get_as<double>(v, key);
    else if (key == "kts.use_dataset_change_points") c.use_dataset_change_points = get_as<bool>(v, key);
    else if (key == "eval_every") c.eval_every = get_count(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.gbt.dropout_rate = c.dropout_rate;
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["weight_decay"] = weight_decay;
  j["dropout_rate"] = dropout_rate;
  j["seed"] = seed;
  j["folds"] = folds;
  j["budget_ratio"] = budget_ratio;
  j["graph.tau"] = graph_tau ? json(*graph_tau) : json(nullptr);
  j["graph.forward_neighbors"] = forward_neighbors;
  j["gbt.tau1"] = gbt.tau1;
  j["gbt.tau2"] = gbt.tau2;
  j["gbt.alpha1"] = gbt.alpha1;
  j["gbt.alpha2"] = gbt.alpha2;
  j["gbt.hidden_dim"] = gbt.hidden_dim;
  j["gbt.n_layers"] = gbt.n_layers;
  j["gbt.max_positions"] = gbt.max_positions;
  j["gbt.time_embed_layers"] = gbt.time_embed_layers;
  j["model.token_dim"] = token_dim;
  j["loss.a"] = loss.a;
  j["loss.b"] = loss.b;
  j["loss.subset_size"] = loss.subset_size;
  j["loss.mode"] = loss_mode == LossMode::kBiased ? "biased" : "mean";
  j["optim.beta1"] = beta1;
  j["optim.beta2"] = beta2;
  j["optim.eps"] = eps;
  j["kts.max_changes"] = kts_max_changes;
  j["kts.penalty"] = kts_penalty;
  j["kts.kernel"] = kts_kernel.kind == KernelKind::kLinear ? "linear" : "rbf";
  j["kts.rbf_gamma"] = kts_kernel.rbf_gamma;
  j["kts.use_dataset_change_points"] = use_dataset_change_points;
  j["eval_every"] = eval_every;
  return j.dump(2);
}

}  // namespace lgrln
