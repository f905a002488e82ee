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

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "guidecot/cot/training.hpp"
#include "guidecot/cot/transformer.hpp"
#include "guidecot/dataset/dataset.hpp"
#include "guidecot/dataset/synth.hpp"
#include "guidecot/eval/evaluate.hpp"
#include "guidecot/eval/steering.hpp"
#include "guidecot/goal/predictor.hpp"
#include "guidecot/goal/training.hpp"

namespace guidecot {

namespace dataset {

NLOHMANN_JSON_SERIALIZE_ENUM(LayoutKind, {{LayoutKind::corridor, "corridor"}, {LayoutKind::plaza, "plaza"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LayoutSpec, kind, width_m, height_m, px_per_m, corridor_width_m,
                                                junction_jitter_m, num_pedestrians, track_frames, horizon_frames,
                                                frame_stride, speed_m_per_frame, speed_jitter, lane_offset_m,
                                                position_noise_m, num_pillars, marked_exit_bias)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WindowConfig, tau_obs, tau_pred, stride)

}  // namespace dataset

/// Where scenes come from: a manifest on disk, or the synthetic generator when `manifest` is empty.
struct DataConfig {
  std::string manifest;
  dataset::LayoutSpec synth_layout;
  std::uint64_t synth_seed{42};
  int synth_scenes{5};
  dataset::WindowConfig window;

  dataset::Dataset load() const {
    if (!manifest.empty()) return dataset::load_manifest(manifest);
    if (synth_scenes < 1) throw Error(ErrorCode::configuration, "data.synth_scenes must be >= 1");
    return dataset::synth_dataset(synth_layout, synth_seed, synth_scenes, window);
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataConfig, manifest, synth_layout, synth_seed, synth_scenes, window)

struct ServiceConfig {
  std::string host{"127.0.0.1"};
  int port{8080};
  std::string goal_checkpoint;
  std::string llm_checkpoint;
  std::string run_dir{"runs"};
  int max_grid{64};  // transported probability maps are pooled down to at most this size per side
  int default_k{20};
  int threads{8};

  void validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::configuration, "service.port must lie in [0, 65535]");
    if (max_grid < 1) throw Error(ErrorCode::configuration, "service.max_grid must be >= 1");
    if (default_k < 1) throw Error(ErrorCode::configuration, "service.default_k must be >= 1");
    if (threads < 1) throw Error(ErrorCode::configuration, "service.threads must be >= 1");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ServiceConfig, host, port, goal_checkpoint, llm_checkpoint, run_dir,
                                                max_grid, default_k, threads)

struct ProjectConfig {
  std::string held_out{"synth0"};
  DataConfig data;
  goal::GoalModelConfig goal_model;
  goal::GoalTrainConfig goal_training;
  cot::SeqModelConfig llm_model;
  cot::LlmTrainConfig llm_training;
  eval::EvalConfig eval;
  eval::SteeringConfig steering;
  ServiceConfig service;

  /// Small synthetic setup that trains end to end on one CPU core in minutes.
  static ProjectConfig desk() {
    ProjectConfig c;
    c.goal_model.resolution = {80, 80, 40, 40};
    c.goal_model.sigma_heatmap = 1.5;
    c.goal_model.sigma_goal = 1.5;
    c.goal_training.epochs = 10;
    c.goal_training.batch_size = 16;
    c.goal_training.learning_rate = 1e-3;
    c.goal_training.augment = true;
    c.llm_model.text.decimals = 1;
    c.llm_model.text.context_neighbors = 0;
    c.llm_model.text.cot_decimals = 0;
    c.llm_training.epochs = 12;
    c.llm_training.learning_rate = 2e-3;
    return c;
  }

  /// Full-size setting: 224 px encoder input, 128 px goal grid, small transformer.
  static ProjectConfig full() {
    ProjectConfig c;
    c.llm_model = cot::SeqModelConfig::small();
    c.llm_model.text.decimals = 2;
    c.llm_model.text.context_neighbors = 8;
    return c;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ProjectConfig, held_out, data, goal_model, goal_training, llm_model,
                                                llm_training, eval, steering, service)

namespace detail {

inline const char* json_kind(const nlohmann::json& j) {
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "boolean";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

/// Rejects keys the reference does not have and values whose JSON kind differs from it.
inline void check_fields(const nlohmann::json& given, const nlohmann::json& reference, const std::string& path) {
  if (reference.is_null()) return;
  if (std::string(json_kind(given)) != json_kind(reference)) {
    throw Error(ErrorCode::configuration, "config field '" + path + "' expects " + json_kind(reference) + ", got " +
                                              json_kind(given));
  }
  if (given.is_object()) {
    for (const auto& [key, value] : given.items()) {
      const std::string sub = path.empty() ? key : path + "." + key;
      if (!reference.contains(key)) throw Error(ErrorCode::configuration, "unknown config field '" + sub + "'");
      check_fields(value, reference.at(key), sub);
    }
  } else if (given.is_array() && !reference.empty()) {
    for (std::size_t k = 0; k < given.size(); ++k) {
      check_fields(given[k], reference.front(), path + "[" + std::to_string(k) + "]");
    }
  }
}

}  // namespace detail

/// Parses a config on top of a preset (`"preset": "desk" | "full"`, default desk).
inline ProjectConfig parse_config(nlohmann::json j) {
  if (!j.is_object()) throw Error(ErrorCode::configuration, "config must be a JSON object");
  ProjectConfig base = ProjectConfig::desk();
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw Error(ErrorCode::configuration, "config field 'preset' expects string");
    const auto preset = j["preset"].get<std::string>();
    if (preset == "full") base = ProjectConfig::full();
    else if (preset != "desk") throw Error(ErrorCode::configuration, "config field 'preset' must be 'desk' or 'full'");
    j.erase("preset");
  }
  nlohmann::json merged = base;
  detail::check_fields(j, merged, "");
  merged.merge_patch(j);
  ProjectConfig out;
  try {
    out = merged.get<ProjectConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::configuration, std::string("invalid config: ") + e.what());
  }
  out.service.validate();
  out.llm_model.validate();
  out.goal_model.style.validate();
  return out;
}

inline ProjectConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, "config '" + path + "': " + e.what());
  }
  return parse_config(std::move(j));
}

/// GUIDECOT_PORT, GUIDECOT_GOAL_CHECKPOINT and GUIDECOT_LLM_CHECKPOINT take precedence over the file.
inline void apply_env_overrides(ServiceConfig& cfg) {
  if (const char* port = std::getenv("GUIDECOT_PORT")) {
    char* end = nullptr;
    const long v = std::strtol(port, &end, 10);
    if (end == port || *end != '\0') throw Error(ErrorCode::configuration, "GUIDECOT_PORT is not an integer");
    cfg.port = static_cast<int>(v);
  }
  if (const char* p = std::getenv("GUIDECOT_GOAL_CHECKPOINT")) cfg.goal_checkpoint = p;
  if (const char* p = std::getenv("GUIDECOT_LLM_CHECKPOINT")) cfg.llm_checkpoint = p;
  cfg.validate();
}

}  // namespace guidecot
