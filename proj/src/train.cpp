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

#include "lgrln/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "lgrln/emloss.hpp"
#include "lgrln/error.hpp"
#include "lgrln/metrics.hpp"
#include "lgrln/optim.hpp"

namespace lgrln {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const Tensor* tokens_of(const Video& v) { return v.query_tokens ? &*v.query_tokens : nullptr; }

MixtureWeights weights_for(const std::vector<double>& probs, const Video& v, const TrainConfig& cfg) {
  if (cfg.loss_mode == LossMode::kMean) return {};
  return e_step(probs, v.annotations, cfg.loss);
}

double video_loss_value(const std::vector<double>& probs, const Video& v, const MixtureWeights& w,
                        const TrainConfig& cfg) {
  const double total = cfg.loss_mode == LossMode::kMean ? mean_label_bce(probs, v.annotations)
                                                        : biased_bce(probs, v.annotations, w);
  return total / static_cast<double>(v.n_frames);
}

template <typename F>
std::optional<double> defined_or_empty(F&& f) {
  try {
    return f();
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  }
}

void mean_of_defined(const std::vector<std::optional<double>>& xs, std::optional<double>& out) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++count;
    }
  }
  out = count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt;
}

}  // namespace

std::string LogRow::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["split"] = split;
  j["train_loss"] = train_loss;
  j["val_loss"] = optional_json(val_loss);
  j["f1_max"] = optional_json(f1_max);
  j["f1_mean"] = optional_json(f1_mean);
  return j.dump();
}

std::string VideoEval::to_json() const {
  json j;
  j["id"] = id;
  j["loss"] = loss;
  j["f1_max"] = f1_max;
  j["f1_mean"] = f1_mean;
  j["tau"] = optional_json(tau);
  j["rho"] = optional_json(rho);
  return j.dump();
}

std::string EvalReport::to_json() const {
  json j;
  j["id"] = "aggregate";
  j["loss"] = loss;
  j["f1_max"] = f1_max;
  j["f1_mean"] = f1_mean;
  j["tau"] = optional_json(tau);
  j["rho"] = optional_json(rho);
  return j.dump();
}

std::string CrossvalReport::to_json() const {
  json j;
  j["f1_max"] = f1_max;
  j["f1_mean"] = f1_mean;
  j["tau"] = optional_json(tau);
  j["rho"] = optional_json(rho);
  json fj = json::array();
  for (const auto& f : folds) {
    fj.push_back({{"fold", f.fold},
                  {"test_ids", f.test_ids},
                  {"f1_max", f.report.f1_max},
                  {"f1_mean", f.report.f1_mean},
                  {"tau", optional_json(f.report.tau)},
                  {"rho", optional_json(f.report.rho)}});
  }
  j["folds"] = std::move(fj);
  return j.dump();
}

ModelConfig model_config_for(const Dataset& dataset, const TrainConfig& cfg) {
  ModelConfig mc;
  mc.input_dim = dataset.feature_dim();
  mc.token_dim = dataset.token_dim().value_or(cfg.token_dim);
  mc.gbt = cfg.gbt;
  mc.gbt.dropout_rate = cfg.dropout_rate;
  return mc;
}

GraphSpec graph_spec_for(const Video& video, const TrainConfig& cfg) {
  return GraphSpec{video.fps, cfg.tau_for(video.fps), video.timestamps};
}

Var video_loss(const Var& probs, const Video& v, const MixtureWeights& w, const TrainConfig& cfg) {
  const Var total =
      cfg.loss_mode == LossMode::kMean ? mean_label_bce(probs, v.annotations) : biased_bce(probs, v.annotations, w);
  return scale(total, 1.0 / static_cast<double>(v.n_frames));
}

TrainResult train(const Dataset& train_set, const Dataset* val_set, const TrainConfig& cfg,
                  const LogCallback& on_row) {
  cfg.validate(/*allow_zero_lr=*/true);
  if (train_set.empty()) throw ConfigError("training set is empty");

  TrainResult result;
  result.model.config = model_config_for(train_set, cfg);
  result.model.params = ModelParams::init(result.model.config, cfg.seed);
  Model& model = result.model;

  auto named = model.params.named();
  std::vector<Tensor*> param_ptrs;
  for (auto& [name, t] : named) param_ptrs.push_back(t);

  AdamW optimizer(cfg.optimizer());
  Rng order_rng(cfg.seed + 1);
  Rng dropout_rng(cfg.seed + 2);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);

    std::vector<MixtureWeights> weights(train_set.size());
    if (cfg.loss_mode == LossMode::kBiased) {
      for (std::size_t i = 0; i < train_set.size(); ++i) {
        const Video& v = train_set.videos[i];
        weights[i] = weights_for(predict(model, v.features, tokens_of(v), graph_spec_for(v, cfg)), v, cfg);
      }
    }

    double total = 0.0;
    for (std::size_t i : order) {
      const Video& v = train_set.videos[i];
      Tape tape;
      const ForwardPass pass = forward(tape, model, v.features, tokens_of(v), graph_spec_for(v, cfg),
                                       ForwardMode{&dropout_rng}, true);
      const Var loss = video_loss(pass.probs, v, weights[i], cfg);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss on video '" + v.id + "' at epoch " + std::to_string(epoch));
      }
      total += value;
      const GradMap grads = tape.backward(loss);
      std::vector<const Tensor*> grad_ptrs;
      grad_ptrs.reserve(pass.params.size());
      for (const Var& p : pass.params) grad_ptrs.push_back(&grads.at(p));
      optimizer.step(param_ptrs, grad_ptrs);
    }

    LogRow row;
    row.epoch = epoch;
    row.split = "train";
    row.train_loss = total / static_cast<double>(train_set.size());
    const bool eval_now = cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (val_set && !val_set->empty() && eval_now) {
      const EvalReport rep = evaluate(model, *val_set, cfg);
      row.val_loss = rep.loss;
      row.f1_max = rep.f1_max;
      row.f1_mean = rep.f1_mean;
    }
    result.log.push_back(row);
    if (on_row) on_row(row);
  }
  return result;
}

ShotSegmentation segment_video(const Tensor& features, const std::optional<std::vector<std::size_t>>& change_points,
                               const TrainConfig& cfg) {
  const std::size_t n = features.extent(0);
  if (cfg.use_dataset_change_points && change_points) {
    ShotSegmentation seg{*change_points, n};
    seg.validate();
    return seg;
  }
  if (n < 2) return ShotSegmentation{{}, n};
  std::size_t max_changes = cfg.kts_max_changes ? cfg.kts_max_changes : std::max<std::size_t>(1, n / 10);
  max_changes = std::min(max_changes, n - 1);
  const Tensor gram = kernel_matrix(features, cfg.kts_kernel);
  const double penalty = cfg.kts_penalty * mean_diagonal(gram);
  return kts_select(kts_dynamic_program(gram, max_changes), n, penalty);
}

Inference infer(const Model& model, const Tensor& features, const Tensor* query_tokens, const GraphSpec& graphs,
                const std::optional<std::vector<std::size_t>>& change_points, const TrainConfig& cfg) {
  if (features.rank() != 2 || features.extent(1) != model.config.input_dim) {
    throw CheckpointError("features " + shape_string(features.shape()) + " do not match checkpoint input width " +
                          std::to_string(model.config.input_dim));
  }
  if (query_tokens && query_tokens->extent(0) > 0 && query_tokens->extent(1) != model.config.token_dim) {
    throw CheckpointError("query " + shape_string(query_tokens->shape()) + " does not match checkpoint token width " +
                          std::to_string(model.config.token_dim));
  }
  Inference out;
  out.probs = predict(model, features, query_tokens, graphs);
  out.segmentation = segment_video(features, change_points, cfg);
  out.summary = summarize(out.probs, out.segmentation, cfg.budget_ratio);
  return out;
}

EvalReport evaluate(const Model& model, const Dataset& dataset, const TrainConfig& cfg) {
  EvalReport rep;
  std::vector<std::optional<double>> taus, rhos;
  for (const Video& v : dataset.videos) {
    const GraphSpec spec = graph_spec_for(v, cfg);
    const Inference inf = infer(model, v.features, tokens_of(v), spec, v.change_points, cfg);
    VideoEval ev;
    ev.id = v.id;
    ev.loss = video_loss_value(inf.probs, v, weights_for(inf.probs, v, cfg), cfg);
    const F1Multi f = f1_multi(inf.summary.frame_mask, v.annotations.labels);
    ev.f1_max = f.max;
    ev.f1_mean = f.mean;
    const std::vector<double> target = v.mean_importance();
    ev.tau = defined_or_empty([&] { return kendall_tau(inf.probs, target); });
    ev.rho = defined_or_empty([&] { return spearman_rho(inf.probs, target); });
    rep.loss += ev.loss;
    rep.f1_max += ev.f1_max;
    rep.f1_mean += ev.f1_mean;
    taus.push_back(ev.tau);
    rhos.push_back(ev.rho);
    rep.videos.push_back(std::move(ev));
  }
  if (!dataset.empty()) {
    const double n = static_cast<double>(dataset.size());
    rep.loss /= n;
    rep.f1_max /= n;
    rep.f1_mean /= n;
  }
  mean_of_defined(taus, rep.tau);
  mean_of_defined(rhos, rep.rho);
  return rep;
}

std::vector<std::size_t> fold_assignment(const Dataset& dataset, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (folds > dataset.size()) {
    throw ConfigError(std::to_string(folds) + " folds for " + std::to_string(dataset.size()) + " videos");
  }
  std::vector<std::string> ids;
  for (const auto& v : dataset.videos) ids.push_back(v.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  std::vector<std::size_t> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto pos = std::find(ids.begin(), ids.end(), dataset.videos[i].id) - ids.begin();
    out[i] = static_cast<std::size_t>(pos) % folds;
  }
  return out;
}

CrossvalReport crossval(const Dataset& dataset, const TrainConfig& cfg, const LogCallback& on_row) {
  cfg.validate(/*allow_zero_lr=*/true);
  const auto fold_of = fold_assignment(dataset, cfg.folds, cfg.seed);
  CrossvalReport out;
  std::vector<std::optional<double>> taus, rhos;
  for (std::size_t k = 0; k < cfg.folds; ++k) {
    Dataset train_part, test_part;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (fold_of[i] == k ? test_part : train_part).videos.push_back(dataset.videos[i]);
    }
    const std::string split = "fold" + std::to_string(k);
    TrainResult tr = train(train_part, &test_part, cfg, [&](const LogRow& r) {
      LogRow tagged = r;
      tagged.split = split;
      out.log.push_back(tagged);
      if (on_row) on_row(tagged);
    });
    FoldResult fr;
    fr.fold = k;
    for (const auto& v : test_part.videos) fr.test_ids.push_back(v.id);
    fr.report = evaluate(tr.model, test_part, cfg);
    out.f1_max += fr.report.f1_max;
    out.f1_mean += fr.report.f1_mean;
    taus.push_back(fr.report.tau);
    rhos.push_back(fr.report.rho);
    out.folds.push_back(std::move(fr));
  }
  out.f1_max /= static_cast<double>(cfg.folds);
  out.f1_mean /= static_cast<double>(cfg.folds);
  mean_of_defined(taus, out.tau);
  mean_of_defined(rhos, out.rho);
  return out;
}

}  // namespace lgrln
