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

// Command-line front end: synth | train | eval | summarize | gradcheck.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lgrln/checkpoint.hpp"
#include "lgrln/config.hpp"
#include "lgrln/dataset.hpp"
#include "lgrln/error.hpp"
#include "lgrln/gradsuite.hpp"
#include "lgrln/lgrt.hpp"
#include "lgrln/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::string dataset;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--dataset", c.dataset, "dataset manifest");
  cmd->add_option("--seed", c.seed, "overrides the config seed");
  cmd->add_option("--out", c.out, "output path");
}

lgrln::TrainConfig load_config(const Common& c) {
  lgrln::TrainConfig cfg = c.config.empty() ? lgrln::TrainConfig{} : lgrln::TrainConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

lgrln::Dataset require_dataset(const Common& c) {
  if (c.dataset.empty()) throw lgrln::ConfigError("--dataset is required");
  return lgrln::load_dataset(c.dataset);
}

// Writes to `path`, or stdout when it is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      file_.open(path);
      if (!file_) throw lgrln::ConfigError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

json rle(const std::vector<bool>& mask) {
  json runs = json::array();
  for (const auto& [start, length] : lgrln::mask_runs(mask)) runs.push_back({start, length});
  return runs;
}

int run_synth(const Common& c, lgrln::SynthOptions opt) {
  if (c.out.empty()) throw lgrln::ConfigError("synth needs --out DIR");
  if (c.seed) opt.seed = *c.seed;
  const auto manifest = lgrln::save_dataset(lgrln::synth_dataset(opt), c.out);
  std::cout << manifest.string() << "\n";
  return kOk;
}

int run_train(const Common& c, bool crossval, const std::string& log_path, const std::string& plot_path,
              const std::string& graphs_dir) {
  const lgrln::TrainConfig cfg = load_config(c);
  const lgrln::Dataset ds = require_dataset(c);
  if (!graphs_dir.empty()) {
    fs::create_directories(graphs_dir);
    for (const auto& v : ds.videos) {
      const auto g = lgrln::make_graphs(v.n_frames, lgrln::graph_spec_for(v, cfg));
      lgrln::write_file_atomic(fs::path(graphs_dir) / (v.id + ".graphs.json"), lgrln::graphs_to_json(g));
    }
  }
  Output log(log_path);
  const auto on_row = [&](const lgrln::LogRow& row) { log.stream() << row.to_json() << "\n" << std::flush; };

  std::vector<lgrln::LogRow> rows;
  if (crossval) {
    const auto report = lgrln::crossval(ds, cfg, on_row);
    rows = report.log;
    if (!c.out.empty()) lgrln::write_file_atomic(c.out, report.to_json() + "\n");
    else std::cout << report.to_json() << "\n";
  } else {
    const auto result = lgrln::train(ds, nullptr, cfg, on_row);
    rows = result.log;
    if (!c.out.empty()) lgrln::save_checkpoint(c.out, result.model, &cfg);
  }
  if (!plot_path.empty()) {
    std::string csv = "split,epoch,train_loss,val_loss\n";
    for (const auto& r : rows) {
      char line[128];
      std::snprintf(line, sizeof(line), "%s,%zu,%.17g,", r.split.c_str(), r.epoch, r.train_loss);
      csv += line;
      if (r.val_loss) {
        std::snprintf(line, sizeof(line), "%.17g", *r.val_loss);
        csv += line;
      }
      csv += "\n";
    }
    lgrln::write_file_atomic(plot_path, csv);
  }
  return kOk;
}

int run_eval(const Common& c, const std::string& checkpoint) {
  if (checkpoint.empty()) throw lgrln::ConfigError("eval needs --checkpoint");
  const lgrln::Checkpoint ck = lgrln::load_checkpoint(checkpoint);
  lgrln::TrainConfig cfg = c.config.empty() ? ck.config.value_or(lgrln::TrainConfig{}) : load_config(c);
  if (c.seed) cfg.seed = *c.seed;
  const lgrln::Dataset ds = require_dataset(c);
  const auto report = lgrln::evaluate(ck.model, ds, cfg);
  Output out(c.out);
  for (const auto& v : report.videos) out.stream() << v.to_json() << "\n";
  out.stream() << report.to_json() << "\n";
  return kOk;
}

lgrln::Tensor read_matrix(const std::string& path, const char* what) {
  lgrln::Blob blob = lgrln::read_lgrt(path);
  if (blob.tensor.rank() != 2) {
    throw lgrln::LoadError(std::string(what) + " " + path + " must be a matrix, got " +
                           lgrln::shape_string(blob.tensor.shape()));
  }
  return std::move(blob.tensor);
}

int run_summarize(const Common& c, const std::string& checkpoint, const std::string& features_path, double fps,
                  const std::string& query_path) {
  if (checkpoint.empty() || features_path.empty()) {
    throw lgrln::ConfigError("summarize needs --checkpoint and --features");
  }
  const lgrln::Checkpoint ck = lgrln::load_checkpoint(checkpoint);
  lgrln::TrainConfig cfg = c.config.empty() ? ck.config.value_or(lgrln::TrainConfig{}) : load_config(c);
  const lgrln::Tensor features = read_matrix(features_path, "features");
  std::optional<lgrln::Tensor> query;
  if (!query_path.empty()) query = read_matrix(query_path, "query");
  if (!(fps > 0.0)) throw lgrln::ConfigError("--fps must be positive");

  const lgrln::GraphSpec spec{fps, cfg.tau_for(fps), std::nullopt};
  const auto inf = lgrln::infer(ck.model, features, query ? &*query : nullptr, spec, std::nullopt, cfg);
  json j;
  j["n_frames"] = features.extent(0);
  j["change_points"] = inf.segmentation.change_points;
  j["shot_scores"] = inf.summary.shot_scores;
  std::vector<std::size_t> selected;
  for (std::size_t s = 0; s < inf.summary.selected.size(); ++s) {
    if (inf.summary.selected[s]) selected.push_back(s);
  }
  j["selected"] = selected;
  j["budget"] = inf.summary.budget;
  j["frame_mask"] = rle(inf.summary.frame_mask);
  Output out(c.out);
  out.stream() << j.dump() << "\n";
  return kOk;
}

int run_gradcheck(const Common& c, std::size_t instances) {
  const auto entries = lgrln::run_gradient_suite(instances, c.seed.value_or(0));
  Output out(c.out);
  bool ok = true;
  for (const auto& e : entries) {
    json j{{"op", e.op},           {"instances", e.instances}, {"rejected", e.rejected},
           {"max_error", e.max_error}, {"seconds", e.seconds},     {"passed", e.passed()}};
    out.stream() << j.dump() << "\n";
    ok = ok && e.passed();
  }
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal graph video summarization"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  add_common(synth, common);
  lgrln::SynthOptions synth_opt;
  synth->add_option("--videos", synth_opt.n_videos);
  synth->add_option("--min-frames", synth_opt.min_frames);
  synth->add_option("--max-frames", synth_opt.max_frames);
  synth->add_option("--scenes", synth_opt.n_scenes);
  synth->add_option("--annotators", synth_opt.n_annotators);
  synth->add_option("--dim", synth_opt.feature_dim);
  synth->add_option("--noise", synth_opt.noise);
  synth->add_option("--fps", synth_opt.fps);
  synth->add_flag("--queries", synth_opt.with_queries);

  auto* train = app.add_subcommand("train", "train a model or run cross-validation");
  add_common(train, common);
  bool crossval = false;
  std::string log_path, plot_path, graphs_dir;
  train->add_flag("--crossval", crossval, "k-fold cross-validation; --out receives the report");
  train->add_option("--log", log_path, "JSON-lines log (default stdout)");
  train->add_option("--emit-plotdata", plot_path, "loss curves as CSV");
  train->add_option("--dump-graphs", graphs_dir, "directory for per-video edge lists");

  auto* eval = app.add_subcommand("eval", "per-video and aggregate metrics");
  add_common(eval, common);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory");

  auto* summ = app.add_subcommand("summarize", "summarize one video");
  add_common(summ, common);
  std::string features_path, query_path;
  double fps = 1.0;
  summ->add_option("--checkpoint", checkpoint, "checkpoint directory");
  summ->add_option("--features", features_path, "LGRT [n x D] features");
  summ->add_option("--fps", fps, "sampling rate of the features");
  summ->add_option("--query-blob", query_path, "LGRT [L x D_t] query tokens");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  add_common(grad, common);
  std::size_t instances = 20;
  grad->add_option("--instances", instances, "instances per operation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return run_synth(common, synth_opt);
    if (*train) return run_train(common, crossval, log_path, plot_path, graphs_dir);
    if (*eval) return run_eval(common, checkpoint);
    if (*summ) return run_summarize(common, checkpoint, features_path, fps, query_path);
    if (*grad) return run_gradcheck(common, instances);
  } catch (const lgrln::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const lgrln::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const lgrln::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
