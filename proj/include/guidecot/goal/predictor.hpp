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
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/hash.hpp"
#include "guidecot/dataset/scene.hpp"
#include "guidecot/goal/encoder.hpp"
#include "guidecot/goal/frames.hpp"
#include "guidecot/goal/probability.hpp"
#include "guidecot/goal/unet.hpp"
#include "guidecot/render/heatmap.hpp"
#include "guidecot/render/prompt.hpp"
#include "guidecot/render/semantic_condition.hpp"

namespace guidecot::goal {

struct GoalModelConfig {
  Resolution resolution;
  EncoderConfig encoder;
  UNetConfig unet;
  render::VisualPromptStyle style;  // sizes given at a 224-px reference width
  double sigma_heatmap{4.0};        // grid cells
  double sigma_goal{4.0};           // grid cells
  int semantic_classes{3};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GoalModelConfig, resolution, encoder, unet, style, sigma_heatmap,
                                                sigma_goal, semantic_classes)

/// Both conditions for one pedestrian plus the frame mapping of its scene.
struct GoalInputs {
  render::VisualCondition vis;
  render::SemanticCondition sem;
  FrameMap frames;
  bool used_fallback_style{false};  // arrow was degenerate, points drawn instead
};

inline constexpr const char* kGoalCheckpointFormat = "guidecot-goal";
inline constexpr int kGoalCheckpointVersion = 1;

/// Visual encoder + U-Net goal module with the condition rendering that feeds them.
class GoalPredictor {
 public:
  explicit GoalPredictor(const GoalModelConfig& cfg)
      : cfg_(cfg),
        encoder_(std::make_unique<VisualEncoder>(cfg.encoder, cfg.resolution)),
        unet_(std::make_unique<GoalUNet>(cfg.unet, 1 + cfg.semantic_classes, encoder_->exposed_channels())) {
    cfg.style.validate();
    if (!(cfg.sigma_heatmap > 0.0) || !(cfg.sigma_goal > 0.0)) throw Error(ErrorCode::parameter, "sigmas must be > 0");
  }

  const GoalModelConfig& config() const noexcept { return cfg_; }
  VisualEncoder& encoder() noexcept { return *encoder_; }
  const VisualEncoder& encoder() const noexcept { return *encoder_; }
  GoalUNet& unet() noexcept { return *unet_; }
  const GoalUNet& unet() const noexcept { return *unet_; }

  FrameMap frames_for(const dataset::Scene& scene) const {
    return FrameMap{scene.image.height(), scene.image.width(), cfg_.resolution};
  }

  /// Renders the visual and semantic conditions for an observed track given in world meters.
  GoalInputs prepare(const dataset::Scene& scene, const Trajectory& past_world) const {
    return prepare(scene, past_world, cfg_.style);
  }

  GoalInputs prepare(const dataset::Scene& scene, const Trajectory& past_world,
                     const render::VisualPromptStyle& style) const {
    const Resolution& res = cfg_.resolution;
    GoalInputs in;
    in.frames = frames_for(scene);
    Trajectory enc_px;
    Trajectory grid_px;
    for (const auto& p : past_world) {
      const Vec2 px = scene.homography.world_to_pixel(p);
      enc_px.push_back(in.frames.scene_to_encoder(px));
      grid_px.push_back(in.frames.scene_to_grid(px));
    }
    Image base = scene.image;
    if (base.height() != res.encoder_height || base.width() != res.encoder_width) {
      base = resize_bilinear(base, res.encoder_height, res.encoder_width);
    }
    const auto scaled = style.scaled_to(res.encoder_width);
    render::PromptLayer layer;
    try {
      layer = render::draw_prompt(enc_px, scaled, res.encoder_height, res.encoder_width);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_heading) throw;
      auto points = scaled;
      points.shape = render::PromptShape::points;
      layer = render::draw_prompt(enc_px, points, res.encoder_height, res.encoder_width);
      in.used_fallback_style = true;
    }
    in.vis = render::composite(base, layer, style.alpha);
    const Grid heat = render::render_heatmap(grid_px, cfg_.sigma_heatmap, res.grid_height, res.grid_width);
    in.sem = render::build_semantic_condition(heat, scene.semantic);
    if (in.sem.semantic_channels() != cfg_.semantic_classes) {
      throw Error(ErrorCode::dimension, "scene has " + std::to_string(in.sem.semantic_channels()) +
                                            " semantic classes, model expects " + std::to_string(cfg_.semantic_classes));
    }
    return in;
  }

  FeaturePyramid encode(const GoalInputs& in) const { return encoder_->encode(in.vis.raster); }

  nn::Var semantic_input(const GoalInputs& in) const {
    const Image& t = in.sem.tensor;
    return nn::constant(t.data(), {t.channels(), t.height(), t.width()});
  }

  /// Differentiable logits [1, G_h, G_w].
  nn::Var forward(const FeaturePyramid& features, const nn::Var& sem) const { return unet_->forward(features, sem); }

  GoalLogitMap predict_logits(const GoalInputs& in) const {
    nn::NoGradGuard guard;
    return to_map(forward(encode(in), semantic_input(in)));
  }

  std::vector<GoalLogitMap> predict_logits_batch(const std::vector<GoalInputs>& batch) const {
    std::vector<GoalLogitMap> out;
    out.reserve(batch.size());
    for (const auto& in : batch) out.push_back(predict_logits(in));
    return out;
  }

  GoalLogitMap to_map(const nn::Var& logits) const {
    GoalLogitMap m{Grid(cfg_.resolution.grid_height, cfg_.resolution.grid_width)};
    std::copy(logits->value.begin(), logits->value.end(), m.logits.data().begin());
    return m;
  }

  std::string config_hash() const { return fnv1a_hex(nlohmann::json(cfg_).dump()); }

  /// Fingerprint of configuration and every weight.
  std::string weights_hash() const {
    return fnv1a_hex(config_hash() + encoder_->weights_hash() + unet_->parameters().hash());
  }

  nlohmann::json checkpoint_json(const nlohmann::json& training = nlohmann::json::object()) const {
    return {{"format", kGoalCheckpointFormat},
            {"version", kGoalCheckpointVersion},
            {"config", cfg_},
            {"config_hash", config_hash()},
            {"encoder_weights_hash", encoder_->weights_hash()},
            {"training", training},
            {"encoder_weights", encoder_->parameters().to_json()},
            {"weights", unet_->parameters().to_json()}};
  }

  void save(const std::string& path, const nlohmann::json& training = nlohmann::json::object()) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write goal checkpoint '" + path + "'");
    out << checkpoint_json(training).dump();
  }

  static GoalPredictor from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kGoalCheckpointFormat) throw Error(ErrorCode::load, "not a goal checkpoint");
    if (j.value("version", 0) != kGoalCheckpointVersion) {
      throw Error(ErrorCode::load, "unsupported goal checkpoint version " + std::to_string(j.value("version", 0)));
    }
    GoalPredictor model(j.at("config").get<GoalModelConfig>());
    model.unet_->parameters().load_json(j.at("weights"));
    if (j.contains("encoder_weights")) model.encoder_->parameters().load_json(j.at("encoder_weights"));
    if (j.contains("encoder_weights_hash") && j.at("encoder_weights_hash").get<std::string>() != model.encoder_->weights_hash()) {
      throw Error(ErrorCode::load, "encoder weights do not match checkpoint hash");
    }
    return model;
  }

  static GoalPredictor load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::load, "cannot open goal checkpoint '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::load, "malformed goal checkpoint '" + path + "': " + e.what());
    }
    return from_json(j);
  }

 private:
  GoalModelConfig cfg_;
  std::unique_ptr<VisualEncoder> encoder_;
  std::unique_ptr<GoalUNet> unet_;
};

}  // namespace guidecot::goal
