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

#include <filesystem>
#include <optional>
#include <string>

#include "lgrln/config.hpp"
#include "lgrln/model.hpp"

namespace lgrln {

struct Checkpoint {
  Model model;
  std::optional<TrainConfig> config;
};

// Writes checkpoint.json and one f64 blob per parameter into `dir`. Every
// file goes through write-temp-then-rename; the manifest is written last.
std::filesystem::path save_checkpoint(const std::filesystem::path& dir, const Model& model,
                                      const TrainConfig* config = nullptr);

// Accepts the directory or the manifest path. Throws CheckpointError when a
// blob is missing or a shape disagrees with the recorded model dimensions.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lgrln
