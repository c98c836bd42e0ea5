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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lgrln/checkpoint.hpp"
#include "lgrln/config.hpp"
#include "lgrln/dataset.hpp"
#include "lgrln/error.hpp"
#include "lgrln/lgrt.hpp"
#include "lgrln/optim.hpp"
#include "lgrln/train.hpp"

namespace lgrln {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("lgrln_pipeline_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SynthOptions small_synth(std::uint64_t seed, std::size_t videos = 3) {
  SynthOptions o;
  o.n_videos = videos;
  o.min_frames = 30;
  o.max_frames = 40;
  o.n_scenes = 6;
  o.feature_dim = 8;
  o.seed = seed;
  return o;
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.gbt.hidden_dim = 16;
  c.gbt.max_positions = 64;
  c.token_dim = 8;
  return c;
}

TEST(Config, ParsesFlatKeys) {
  const auto c = TrainConfig::from_json(R"({"epochs": 7, "gbt.hidden_dim": 32, "loss.mode": "mean",
    "kts.kernel": "rbf", "graph.tau": 1.25, "gbt.time_embed_layers": [0, 1], "dropout_rate": 0.2})");
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.gbt.hidden_dim, 32u);
  EXPECT_EQ(c.loss_mode, LossMode::kMean);
  EXPECT_EQ(c.kts_kernel.kind, KernelKind::kRbf);
  EXPECT_EQ(c.tau_for(10.0), 1.25);
  EXPECT_EQ(c.gbt.time_embed_layers, (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(c.gbt.dropout_rate, 0.2);
}

TEST(Config, DefaultsAndRoundTrip) {
  const TrainConfig d;
  EXPECT_EQ(d.epochs, 30u);
  EXPECT_EQ(d.weight_decay, 0.01);
  EXPECT_EQ(d.dropout_rate, 0.4);
  EXPECT_EQ(d.tau_for(2.0), 2.25);
  EXPECT_NO_THROW(d.validate());
  const auto back = TrainConfig::from_json(d.to_json());
  EXPECT_EQ(back.to_json(), d.to_json());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(TrainConfig::from_json(R"({"epoch": 3})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"epochs": 0})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"learning_rate": 0})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"weight_decay": -1})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"folds": 1})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"loss.mode": "avg"})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json(R"({"epochs": "many"})"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json("[1]"), ConfigError);
  EXPECT_THROW(TrainConfig::from_json("{"), ConfigError);
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(c.validate(true));
}

TEST(Dataset, EmptyManifestIsValid) {
  TempDir dir;
  std::ofstream(dir.path() / "manifest.json") << R"({"videos": []})";
  EXPECT_TRUE(load_dataset(dir.path() / "manifest.json").empty());
}

TEST(Dataset, RoundTripIsBitExact) {
  TempDir dir;
  SynthOptions o = small_synth(3);
  o.with_queries = true;
  const Dataset ds = synth_dataset(o);
  const Dataset back = load_dataset(save_dataset(ds, dir.path()));
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Video &a = ds.videos[i], &b = back.videos[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.n_frames, b.n_frames);
    EXPECT_EQ(a.fps, b.fps);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.annotations.labels, b.annotations.labels);
    EXPECT_EQ(*a.annotations.importance, *b.annotations.importance);
    EXPECT_EQ(a.change_points, b.change_points);
    EXPECT_EQ(*a.query_tokens, *b.query_tokens);
    EXPECT_EQ(a.query_text, b.query_text);
    EXPECT_EQ(a.query_scene, b.query_scene);
  }
}

TEST(Dataset, RejectsNonBinaryAnnotationsNamingVideo) {
  TempDir dir;
  const auto manifest = save_dataset(synth_dataset(small_synth(4, 2)), dir.path());
  Tensor bad = read_lgrt(dir.path() / "video_001.annotations.lgrt").tensor;
  bad(0, 0) = 2.0;
  write_lgrt(dir.path() / "video_001.annotations.lgrt", bad, DType::kU8);
  try {
    load_dataset(manifest);
    FAIL();
  } catch (const LoadError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("video_001"), std::string::npos) << msg;
    EXPECT_NE(msg.find("annotations_blob"), std::string::npos) << msg;
  }
}

TEST(Dataset, RejectsMissingBlobAndShapeMismatch) {
  TempDir dir;
  const auto manifest = save_dataset(synth_dataset(small_synth(5, 2)), dir.path());
  fs::remove(dir.path() / "video_000.features.lgrt");
  EXPECT_THROW(load_dataset(manifest), LoadError);

  TempDir dir2;
  const auto m2 = save_dataset(synth_dataset(small_synth(5, 2)), dir2.path());
  auto j = nlohmann::json::parse(slurp(m2));
  j["videos"][1]["n_frames"] = 3;
  std::ofstream(m2) << j.dump();
  try {
    load_dataset(m2);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("video_001"), std::string::npos);
  }
}

TEST(Synth, SingleAnnotatorAndDeterminism) {
  SynthOptions o = small_synth(6);
  o.n_annotators = 1;
  for (const auto& v : synth_dataset(o).videos) EXPECT_EQ(v.annotations.annotators(), 1u);

  TempDir a, b;
  o.n_annotators = 3;
  o.with_queries = true;
  save_dataset(synth_dataset(o), a.path());
  save_dataset(synth_dataset(o), b.path());
  for (const auto& entry : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / entry.path().filename())) << entry.path();
  }
}

TEST(Synth, AnnotatorsDisagree) {
  const Dataset ds = synth_dataset(small_synth(7, 5));
  std::size_t differing = 0;
  for (const auto& v : ds.videos) {
    const auto& l = v.annotations.labels;
    bool same = true;
    for (std::size_t t = 0; t < v.n_frames; ++t) same = same && l(0, t) == l(1, t);
    differing += !same;
  }
  EXPECT_GT(differing, 0u);
}

TEST(Synth, PlantedScenesRecoveredByKts) {
  SynthOptions o = small_synth(8, 4);
  o.noise = 0.0;
  for (const auto& v : synth_dataset(o).videos) {
    const Tensor gram = kernel_matrix(v.features);
    const auto seg = kts_select(kts_dynamic_program(gram, 10), v.n_frames, 1e-3 * mean_diagonal(gram));
    EXPECT_EQ(seg.change_points, *v.change_points) << v.id;
  }
}

TEST(Model, ParameterNamesAreUniqueAndStable) {
  ModelConfig mc;
  mc.input_dim = 8;
  mc.token_dim = 5;
  mc.gbt.hidden_dim = 6;
  const auto p = ModelParams::init(mc, 1);
  std::set<std::string> names;
  for (const auto& [name, t] : p.named()) EXPECT_TRUE(names.insert(name).second) << name;
  EXPECT_EQ(p.named().front().first, "input.w");
  EXPECT_EQ(ModelParams::init(mc, 1).named().size(), p.named().size());
}

TEST(Model, DefaultSizeWithinBudget) {
  const auto p = ModelParams::init(ModelConfig{}, 0);
  EXPECT_LE(p.parameter_count(), 3'500'000u);
}

TEST(Infer, EmptyQueryAndRepeatability) {
  const Dataset ds = synth_dataset(small_synth(9, 1));
  const TrainConfig cfg = small_config();
  const Model model{model_config_for(ds, cfg), ModelParams::init(model_config_for(ds, cfg), 2)};
  const Video& v = ds.videos[0];
  const GraphSpec spec = graph_spec_for(v, cfg);
  const Tensor empty = Tensor::zeros({0, cfg.token_dim});
  const auto a = infer(model, v.features, nullptr, spec, std::nullopt, cfg);
  const auto b = infer(model, v.features, &empty, spec, std::nullopt, cfg);
  const auto c = infer(model, v.features, nullptr, spec, std::nullopt, cfg);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_EQ(a.probs, c.probs);
  EXPECT_EQ(a.summary.frame_mask, c.summary.frame_mask);
  for (double p : a.probs) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  EXPECT_THROW(infer(model, Tensor::zeros({5, 3}), nullptr, spec, std::nullopt, cfg), CheckpointError);
}

TEST(Checkpoint, SaveLoadInferIsBitExact) {
  TempDir dir;
  SynthOptions o = small_synth(10, 2);
  o.with_queries = true;
  const Dataset ds = synth_dataset(o);
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  const TrainResult tr = train(ds, nullptr, cfg);
  save_checkpoint(dir.path(), tr.model, &cfg);
  EXPECT_FALSE(fs::exists(dir.path() / "checkpoint.json.tmp"));
  const Checkpoint ck = load_checkpoint(dir.path());
  ASSERT_TRUE(ck.config.has_value());
  EXPECT_EQ(ck.config->to_json(), cfg.to_json());
  const auto named = tr.model.params.named(), loaded = ck.model.params.named();
  for (std::size_t i = 0; i < named.size(); ++i) EXPECT_EQ(*named[i].second, *loaded[i].second) << named[i].first;
  for (const auto& v : ds.videos) {
    const GraphSpec spec = graph_spec_for(v, cfg);
    EXPECT_EQ(predict(tr.model, v.features, &*v.query_tokens, spec), predict(ck.model, v.features, &*v.query_tokens, spec));
  }
}

TEST(Checkpoint, RejectsShapeMismatch) {
  TempDir dir;
  ModelConfig mc;
  mc.input_dim = 4;
  mc.token_dim = 3;
  mc.gbt.hidden_dim = 5;
  mc.gbt.max_positions = 10;
  save_checkpoint(dir.path(), Model{mc, ModelParams::init(mc, 0)});
  write_lgrt(dir.path() / "head.w.lgrt", Tensor::zeros({4, 1}), DType::kF64);
  EXPECT_THROW(load_checkpoint(dir.path()), CheckpointError);
  fs::remove(dir.path() / "head.w.lgrt");
  EXPECT_THROW(load_checkpoint(dir.path()), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing"), CheckpointError);
}

TEST(AdamW, ReducesToGradientDescent) {
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.beta1 = 0.0;
  cfg.weight_decay = 0.0;
  cfg.adaptive = false;
  AdamW opt(cfg);
  // f(x) = 0.5 * sum c_i x_i^2, gradient c_i x_i.
  const std::vector<double> c = {1.0, 3.0, 0.5};
  Tensor x = Tensor::vector({1.0, -2.0, 4.0});
  std::vector<double> ref(x.data().begin(), x.data().end());
  for (int step = 0; step < 10; ++step) {
    Tensor g = Tensor::zeros({3});
    for (std::size_t i = 0; i < 3; ++i) g[i] = c[i] * x[i];
    Tensor* params[] = {&x};
    const Tensor* grads[] = {&g};
    opt.step(params, grads);
    for (std::size_t i = 0; i < 3; ++i) ref[i] -= 0.1 * c[i] * ref[i];
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x[i], ref[i], 1e-15);
  }
}

TEST(AdamW, SingleStepMatchesHandComputation) {
  AdamW opt(AdamWConfig{});
  Tensor x = Tensor::vector({0.5, -1.0});
  const Tensor g = Tensor::vector({0.2, -0.4});
  Tensor* params[] = {&x};
  const Tensor* grads[] = {&g};
  opt.step(params, grads);
  // m_hat = g, v_hat = g^2 after one step.
  for (std::size_t i = 0; i < 2; ++i) {
    const double start = i == 0 ? 0.5 : -1.0;
    const double expected = start - 1e-3 * (g[i] / (std::abs(g[i]) + 1e-8) + 0.01 * start);
    EXPECT_NEAR(x[i], expected, 1e-15);
  }
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_TRUE(opt.first_moments()[0].all_finite());
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const Dataset ds = synth_dataset(small_synth(11, 2));
  TrainConfig cfg = small_config();
  cfg.learning_rate = 0.0;
  const TrainResult tr = train(ds, nullptr, cfg);
  const ModelParams init = ModelParams::init(tr.model.config, cfg.seed);
  const auto a = tr.model.params.named(), b = init.named();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].second, *b[i].second) << a[i].first;
}

TEST(Train, LogsAndDeterminism) {
  const Dataset ds = synth_dataset(small_synth(12, 3));
  TrainConfig cfg = small_config();
  std::vector<std::string> streamed;
  const TrainResult a = train(ds, &ds, cfg, [&](const LogRow& r) { streamed.push_back(r.to_json()); });
  const TrainResult b = train(ds, &ds, cfg);
  ASSERT_EQ(a.log.size(), cfg.epochs);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].to_json(), b.log[i].to_json());
    EXPECT_EQ(a.log[i].to_json(), streamed[i]);
    const auto j = nlohmann::json::parse(streamed[i]);
    for (const char* key : {"epoch", "split", "train_loss", "val_loss", "f1_max", "f1_mean"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(a.log[i].val_loss.has_value());
  }
}

TEST(Train, MeanLossModeTrains) {
  const Dataset ds = synth_dataset(small_synth(13, 2));
  TrainConfig cfg = small_config();
  cfg.loss_mode = LossMode::kMean;
  const TrainResult r = train(ds, nullptr, cfg);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
}

TEST(Train, NonFiniteLossNamesVideoAndEpoch) {
  Dataset ds = synth_dataset(small_synth(14, 2));
  ds.videos[1].features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    train(ds, nullptr, small_config());
    FAIL();
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("video_001"), std::string::npos) << msg;
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
  }
  EXPECT_THROW(train(Dataset{}, nullptr, small_config()), ConfigError);
}

// One E-step, then gradient steps on the resulting objective, must not
// raise it when the steps are small and dropout is off.
TEST(Train, MStepsDoNotIncreaseTheEStepObjective) {
  const Dataset ds = synth_dataset(small_synth(15, 1));
  const Video& v = ds.videos[0];
  TrainConfig cfg = small_config();
  Model model{model_config_for(ds, cfg), ModelParams::init(model_config_for(ds, cfg), 3)};
  const GraphSpec spec = graph_spec_for(v, cfg);
  const MixtureWeights w = e_step(predict(model, v.features, nullptr, spec), v.annotations, cfg.loss);
  auto objective = [&] { return biased_bce(predict(model, v.features, nullptr, spec), v.annotations, w); };
  AdamWConfig oc;
  oc.learning_rate = 1e-4;
  oc.weight_decay = 0.0;
  AdamW opt(oc);
  double last = objective();
  for (int step = 0; step < 5; ++step) {
    Tape tape;
    const ForwardPass pass = forward(tape, model, v.features, nullptr, spec, ForwardMode{}, true);
    const GradMap g = tape.backward(biased_bce(pass.probs, v.annotations, w));
    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    auto named = model.params.named();
    for (std::size_t i = 0; i < named.size(); ++i) {
      params.push_back(named[i].second);
      grads.push_back(&g.at(pass.params[i]));
    }
    opt.step(params, grads);
    const double now = objective();
    EXPECT_LE(now, last);
    last = now;
  }
}

TEST(Crossval, PartitionAndStability) {
  Dataset ds = synth_dataset(small_synth(16, 7));
  const auto folds = fold_assignment(ds, 3, 5);
  std::vector<std::size_t> sizes(3, 0);
  for (std::size_t f : folds) ++sizes[f];
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);

  Dataset shuffled = ds;
  std::reverse(shuffled.videos.begin(), shuffled.videos.end());
  const auto again = fold_assignment(shuffled, 3, 5);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(again[ds.size() - 1 - i], folds[i]);
  EXPECT_THROW(fold_assignment(ds, 8, 5), ConfigError);
}

TEST(Crossval, LeaveOneOutCoversEveryVideoOnce) {
  const Dataset ds = synth_dataset(small_synth(17, 3));
  TrainConfig cfg = small_config();
  cfg.epochs = 1;
  cfg.folds = 3;
  const auto report = crossval(ds, cfg);
  ASSERT_EQ(report.folds.size(), 3u);
  std::multiset<std::string> seen;
  for (const auto& f : report.folds) seen.insert(f.test_ids.begin(), f.test_ids.end());
  EXPECT_EQ(seen, (std::multiset<std::string>{"video_000", "video_001", "video_002"}));
  EXPECT_EQ(report.log.size(), 3u);
  EXPECT_EQ(report.log[2].split, "fold2");
  EXPECT_NO_THROW(nlohmann::json::parse(report.to_json()));
}

TEST(Evaluate, ReportsBothF1AndCorrelations) {
  const Dataset ds = synth_dataset(small_synth(18, 2));
  TrainConfig cfg = small_config();
  const TrainResult tr = train(ds, nullptr, cfg);
  const EvalReport rep = evaluate(tr.model, ds, cfg);
  ASSERT_EQ(rep.videos.size(), 2u);
  for (const auto& v : rep.videos) {
    EXPECT_LE(v.f1_mean, v.f1_max);
    ASSERT_TRUE(v.tau.has_value());
    EXPECT_LE(std::abs(*v.tau), 1.0);
  }
  cfg.use_dataset_change_points = false;
  EXPECT_NO_THROW(evaluate(tr.model, ds, cfg));
}

// The CLI binary path is injected by the build.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(LGRLN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Cli, SubcommandsAndExitCodes) {
  TempDir dir;
  const std::string d = dir.path().string();
  std::ofstream(dir.path() / "cfg.json") << R"({"epochs": 2, "gbt.hidden_dim": 8, "gbt.max_positions": 64})";
  std::ofstream(dir.path() / "bad.json") << R"({"epochz": 2})";
  EXPECT_EQ(run_cli("synth --out " + d + "/ds --videos 3 --min-frames 30 --max-frames 40 --scenes 5 --dim 6 --queries"), 0);
  EXPECT_EQ(run_cli("train --config " + d + "/cfg.json --dataset " + d + "/ds/manifest.json --out " + d +
                    "/ck --log " + d + "/log.jsonl --emit-plotdata " + d + "/loss.csv --dump-graphs " + d + "/g"),
            0);
  EXPECT_TRUE(fs::exists(dir.path() / "ck" / "checkpoint.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "g" / "video_000.graphs.json"));
  EXPECT_EQ(slurp(dir.path() / "loss.csv").substr(0, 5), "split");
  EXPECT_EQ(run_cli("eval --checkpoint " + d + "/ck --dataset " + d + "/ds/manifest.json --out " + d + "/eval.jsonl"), 0);
  EXPECT_EQ(run_cli("summarize --checkpoint " + d + "/ck --features " + d + "/ds/video_000.features.lgrt --fps 2 "
                    "--query-blob " + d + "/ds/video_000.query.lgrt --out " + d + "/summary.json"),
            0);
  const auto summary = nlohmann::json::parse(slurp(dir.path() / "summary.json"));
  for (const char* key : {"change_points", "shot_scores", "selected", "frame_mask"}) EXPECT_TRUE(summary.contains(key));
  EXPECT_EQ(run_cli("train --config " + d + "/cfg.json --dataset " + d + "/ds/manifest.json --crossval --out " + d +
                    "/cv.json"),
            1);  // 5 folds for 3 videos
  EXPECT_EQ(run_cli("gradcheck --instances 2"), 0);

  EXPECT_EQ(run_cli("train --config " + d + "/bad.json --dataset " + d + "/ds/manifest.json"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("train --dataset " + d + "/nowhere.json"), 2);
  EXPECT_EQ(run_cli("eval --checkpoint " + d + "/nowhere --dataset " + d + "/ds/manifest.json"), 2);
}

}  // namespace
}  // namespace lgrln
