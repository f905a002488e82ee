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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/log.hpp"
#include "guidecot/dataset/annotations.hpp"
#include "guidecot/dataset/scene.hpp"
#include "guidecot/dataset/windows.hpp"

namespace guidecot::dataset {

inline const std::vector<std::string>& eth_ucy_groups() {
  static const std::vector<std::string> groups{"eth", "hotel", "univ", "zara1", "zara2"};
  return groups;
}

struct SceneData {
  Scene scene;
  std::vector<RawAnnotation> annotations;
};

/// Scenes plus the windows built from their annotations.
struct Dataset {
  std::vector<std::string> groups = eth_ucy_groups();
  SemanticClasses classes;
  WindowConfig window_config;
  std::vector<SceneData> scenes;
  std::vector<ObservationWindow> windows;

  const Scene& scene(const std::string& id) const {
    for (const auto& s : scenes)
      if (s.scene.scene_id == id) return s.scene;
    throw Error(ErrorCode::reference, "unknown scene '" + id + "'");
  }
  const std::string& group_of(const ObservationWindow& w) const { return scene(w.scene_id).group; }

  /// Rebuilds `windows` from every scene's annotations.
  void rebuild_windows() {
    windows.clear();
    for (const auto& s : scenes) {
      WindowConfig cfg = window_config;
      cfg.stride = s.scene.frame_stride;
      auto built = build_windows(s.annotations, cfg, s.scene.scene_id);
      windows.insert(windows.end(), std::make_move_iterator(built.begin()), std::make_move_iterator(built.end()));
    }
  }
};

struct Split {
  std::vector<ObservationWindow> train;
  std::vector<ObservationWindow> test;
  std::vector<std::string> warnings;
};

/// Test = windows of the held-out group; train = every other group.
inline Split leave_one_out_split(const Dataset& data, const std::string& held_out) {
  if (std::find(data.groups.begin(), data.groups.end(), held_out) == data.groups.end()) {
    throw Error(ErrorCode::configuration, "unknown scene group '" + held_out + "'");
  }
  Split split;
  for (const auto& w : data.windows) {
    (data.group_of(w) == held_out ? split.test : split.train).push_back(w);
  }
  if (split.train.empty()) {
    split.warnings.push_back("leave-one-out split for '" + held_out + "' has an empty training set");
    log::warn(split.warnings.back());
  }
  return split;
}

/// Fraction of window coordinates whose pixel projection falls outside the scene image.
inline double out_of_bounds_rate(const Dataset& data) {
  std::size_t total = 0;
  std::size_t outside = 0;
  for (const auto& w : data.windows) {
    const Scene& s = data.scene(w.scene_id);
    for (const auto* set : {&w.past, &w.future}) {
      for (const auto& traj : *set) {
        for (const auto& p : traj) {
          ++total;
          if (!s.in_image(s.homography.world_to_pixel(p))) ++outside;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(total);
}

/// Loads a dataset manifest (JSON). Relative paths resolve against the manifest's directory.
///
/// {
///   "groups": ["eth", ...],                       optional
///   "classes": ["traversable", "obstacle", ...],  optional
///   "window": {"tau_obs": 8, "tau_pred": 12},      optional
///   "scenes": [{"id", "group", "annotations", "homography", "image", "semantic", "frame_stride"}]
/// }
inline Dataset load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::io, "cannot open manifest '" + manifest_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::parse, "manifest '" + manifest_path + "': " + e.what());
  }
  const auto base = std::filesystem::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() ? path : base / path).string();
  };

  Dataset data;
  if (j.contains("groups")) data.groups = j.at("groups").get<std::vector<std::string>>();
  if (j.contains("classes")) data.classes.names = j.at("classes").get<std::vector<std::string>>();
  if (j.contains("window")) {
    data.window_config.tau_obs = j["window"].value("tau_obs", 8);
    data.window_config.tau_pred = j["window"].value("tau_pred", 12);
  }
  data.window_config.validate();
  if (!j.contains("scenes") || j["scenes"].empty()) {
    throw Error(ErrorCode::empty_dataset, "manifest lists no scenes");
  }
  for (const auto& entry : j.at("scenes")) {
    SceneData sd;
    sd.scene.scene_id = entry.at("id").get<std::string>();
    sd.scene.group = entry.value("group", sd.scene.scene_id);
    sd.scene.frame_stride = entry.value("frame_stride", 1);
    sd.scene.homography = Homography::load(resolve(entry.at("homography").get<std::string>()));
    sd.scene.image = png::read_rgb(resolve(entry.at("image").get<std::string>()));
    sd.scene.semantic = load_semantic_png(resolve(entry.at("semantic").get<std::string>()), data.classes);
    validate(sd.scene);
    sd.annotations = parse_annotations(resolve(entry.at("annotations").get<std::string>()));
    data.scenes.push_back(std::move(sd));
  }
  data.rebuild_windows();
  return data;
}

/// Writes every scene's files plus `manifest.json` into `dir`.
inline std::string save_dataset(const Dataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["groups"] = data.groups;
  j["classes"] = data.classes.names;
  j["window"] = {{"tau_obs", data.window_config.tau_obs}, {"tau_pred", data.window_config.tau_pred}};
  j["scenes"] = nlohmann::json::array();
  for (const auto& sd : data.scenes) {
    const std::string id = sd.scene.scene_id;
    write_annotations((fs::path(dir) / (id + ".txt")).string(), sd.annotations);
    sd.scene.homography.save((fs::path(dir) / (id + "_H.txt")).string());
    png::write_rgb((fs::path(dir) / (id + ".png")).string(), sd.scene.image);
    save_semantic_png((fs::path(dir) / (id + "_sem.png")).string(), sd.scene.semantic);
    j["scenes"].push_back({{"id", id},
                           {"group", sd.scene.group},
                           {"annotations", id + ".txt"},
                           {"homography", id + "_H.txt"},
                           {"image", id + ".png"},
                           {"semantic", id + "_sem.png"},
                           {"frame_stride", sd.scene.frame_stride}});
  }
  const std::string manifest = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(manifest);
  out << j.dump(2) << '\n';
  return manifest;
}

}  // namespace guidecot::dataset
