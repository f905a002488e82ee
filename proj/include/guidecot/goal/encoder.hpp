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
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/raster.hpp"
#include "guidecot/goal/frames.hpp"
#include "guidecot/nn/module.hpp"

namespace guidecot::goal {

enum class EncoderBackend { clip_resnet50, imagenet_resnet50, remote_clip, toy_cnn };

NLOHMANN_JSON_SERIALIZE_ENUM(EncoderBackend, {{EncoderBackend::clip_resnet50, "clip_resnet50"},
                                              {EncoderBackend::imagenet_resnet50, "imagenet_resnet50"},
                                              {EncoderBackend::remote_clip, "remote_clip"},
                                              {EncoderBackend::toy_cnn, "toy_cnn"}})

inline std::string backend_name(EncoderBackend b) { return nlohmann::json(b).get<std::string>(); }

struct EncoderConfig {
  EncoderBackend backend{EncoderBackend::toy_cnn};
  std::string weights_path;
  bool frozen{true};
  std::vector<int> feature_levels{0, 1, 2};
  std::vector<int> channels{8, 16, 16};  // per pyramid level
  std::uint64_t seed{1234};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderConfig, backend, weights_path, frozen, feature_levels, channels,
                                                seed)

/// Features per pyramid level; level l is [C_l, grid_h / 2^l, grid_w / 2^l]. Unexposed levels are null.
struct FeaturePyramid {
  std::vector<nn::Var> levels;

  bool has(std::size_t level) const { return level < levels.size() && levels[level] != nullptr; }
};

/// Visual encoder over the prompted scene image. The toy backend is a strided conv stack whose first
/// stages bring the encoder resolution down to the goal grid; other backends load converted weights
/// with the same layout from `weights_path`.
class VisualEncoder {
 public:
  VisualEncoder(const EncoderConfig& cfg, const Resolution& res) : cfg_(cfg), res_(res) {
    if (cfg.channels.empty()) throw Error(ErrorCode::architecture, "encoder needs at least one pyramid level");
    for (std::size_t i = 1; i < cfg.feature_levels.size(); ++i) {
      if (cfg.feature_levels[i] <= cfg.feature_levels[i - 1]) {
        throw Error(ErrorCode::architecture, "feature levels must be strictly increasing (decreasing resolution)");
      }
    }
    for (int level : cfg.feature_levels) {
      if (level < 0 || level >= static_cast<int>(cfg.channels.size())) {
        throw Error(ErrorCode::architecture, "feature level " + std::to_string(level) + " outside pyramid");
      }
    }
    if (res.encoder_width % res.grid_width != 0 || res.encoder_height % res.grid_height != 0 ||
        res.encoder_width / res.grid_width != res.encoder_height / res.grid_height) {
      throw Error(ErrorCode::architecture, "encoder resolution must be an integer multiple of the goal grid");
    }
    int factor = res.encoder_width / res.grid_width;
    Rng rng(cfg.seed);
    int in = 3;
    stem_ = nn::Conv2d(store_, "encoder.stem", in, cfg.channels[0], 3, 1, 1, rng);
    in = cfg.channels[0];
    for (int k = 0; factor > 1; ++k) {
      if (factor % 2 != 0) throw Error(ErrorCode::architecture, "encoder/grid ratio must be a power of two");
      reduce_.emplace_back(store_, "encoder.reduce" + std::to_string(k), in, in, 3, 2, 1, rng);
      factor /= 2;
    }
    for (std::size_t l = 1; l < cfg.channels.size(); ++l) {
      stages_.emplace_back(store_, "encoder.stage" + std::to_string(l), in, cfg.channels[l], 3, 2, 1, rng);
      in = cfg.channels[l];
    }

    if (cfg.backend != EncoderBackend::toy_cnn) {
      if (cfg.weights_path.empty() || !std::filesystem::exists(cfg.weights_path)) {
        throw Error(ErrorCode::load, "encoder backend '" + backend_name(cfg.backend) + "' requires weights; '" +
                                         cfg.weights_path + "' not found");
      }
      std::ifstream in_file(cfg.weights_path);
      nlohmann::json j;
      in_file >> j;
      store_.load_json(j.contains("weights") ? j.at("weights") : j);
    }
    store_.set_trainable(!cfg.frozen);
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  nn::ParameterStore& parameters() noexcept { return store_; }
  const nn::ParameterStore& parameters() const noexcept { return store_; }
  std::string weights_hash() const { return store_.hash(); }

  /// Channel count at each pyramid level (0 when the level is not exposed).
  std::vector<int> exposed_channels() const {
    std::vector<int> out(cfg_.channels.size(), 0);
    for (int l : cfg_.feature_levels) out[static_cast<std::size_t>(l)] = cfg_.channels[static_cast<std::size_t>(l)];
    return out;
  }

  FeaturePyramid encode(const Image& x_vis) const {
    Image input = x_vis;
    if (input.height() != res_.encoder_height || input.width() != res_.encoder_width) {
      input = resize_bilinear(input, res_.encoder_height, res_.encoder_width);
    }
    if (input.channels() != 3) throw Error(ErrorCode::dimension, "visual condition must have 3 channels");
    nn::Var x = nn::constant(input.data(), {3, input.height(), input.width()});
    x = nn::relu(stem_(x));
    for (const auto& conv : reduce_) x = nn::relu(conv(x));
    std::vector<nn::Var> all{x};
    for (const auto& conv : stages_) {
      x = nn::relu(conv(x));
      all.push_back(x);
    }
    FeaturePyramid out;
    out.levels.resize(all.size());
    for (int l : cfg_.feature_levels) out.levels[static_cast<std::size_t>(l)] = all[static_cast<std::size_t>(l)];
    return out;
  }

 private:
  EncoderConfig cfg_;
  Resolution res_;
  nn::ParameterStore store_;
  nn::Conv2d stem_;
  std::vector<nn::Conv2d> reduce_;
  std::vector<nn::Conv2d> stages_;
};

}  // namespace guidecot::goal
