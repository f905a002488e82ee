// Copyright 2026 The GuideCoT Authors
//
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
#include <memory>
#include <string>

#include "guidecot/config.hpp"
#include "guidecot/cot/transformer.hpp"
#include "guidecot/dataset/synth.hpp"
#include "guidecot/goal/predictor.hpp"

namespace fixtures {

using namespace guidecot;

/// Two small synthetic scenes (groups synth0, synth1).
inline const dataset::Dataset& tiny_data() {
  static const dataset::Dataset data = [] {
    dataset::LayoutSpec spec;
    spec.num_pedestrians = 8;
    spec.horizon_frames = 60;
    return dataset::synth_dataset(spec, 5, 2);
  }();
  return data;
}

inline goal::GoalModelConfig tiny_goal_config() {
  goal::GoalModelConfig c;
  c.resolution = {32, 32, 16, 16};
  c.encoder.channels = {4, 8, 8};
  c.unet.channels = {4, 8, 8};
  c.sigma_heatmap = 1.0;
  c.sigma_goal = 1.0;
  return c;
}

inline cot::SeqModelConfig tiny_llm_config() {
  cot::SeqModelConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.ff = 32;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.text.decimals = 1;
  c.text.context_neighbors = 0;
  c.decode.max_tokens = 48;
  c.decode.retries = 1;
  return c;
}

/// Scratch directory removed with the object.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("guidecot_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
