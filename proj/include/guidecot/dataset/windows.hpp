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
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/dataset/annotations.hpp"

namespace guidecot::dataset {

struct WindowConfig {
  int tau_obs{8};
  int tau_pred{12};
  int stride{1};  // frame id step between consecutive (decimated) samples

  void validate() const {
    if (tau_obs < 2) throw Error(ErrorCode::configuration, "tau_obs must be >= 2");
    if (tau_pred < 1) throw Error(ErrorCode::configuration, "tau_pred must be >= 1");
    if (stride < 1) throw Error(ErrorCode::configuration, "stride must be >= 1");
  }
};

/// All pedestrians fully observed over [anchor - (tau_obs-1)*stride, anchor + tau_pred*stride].
struct ObservationWindow {
  std::string scene_id;
  std::int64_t anchor_frame{0};
  std::vector<std::int64_t> pedestrian_ids;
  std::vector<Trajectory> past;    // N x tau_obs
  std::vector<Trajectory> future;  // N x tau_pred

  int size() const noexcept { return static_cast<int>(pedestrian_ids.size()); }
  int tau_obs() const noexcept { return past.empty() ? 0 : static_cast<int>(past.front().size()); }
  int tau_pred() const noexcept { return future.empty() ? 0 : static_cast<int>(future.front().size()); }

  std::string id() const { return scene_id + ":" + std::to_string(anchor_frame); }

  int index_of(std::int64_t pedestrian_id) const {
    for (int i = 0; i < size(); ++i)
      if (pedestrian_ids[static_cast<std::size_t>(i)] == pedestrian_id) return i;
    return -1;
  }
};

inline std::vector<ObservationWindow> build_windows(const std::vector<RawAnnotation>& annotations,
                                                    const WindowConfig& cfg, const std::string& scene_id = "") {
  cfg.validate();
  std::map<std::int64_t, std::map<std::int64_t, Vec2>> tracks;
  std::set<std::int64_t> frames;
  for (const auto& a : annotations) {
    tracks[a.pedestrian_id][a.frame_id] = a.position;
    frames.insert(a.frame_id);
  }

  std::vector<ObservationWindow> windows;
  for (const std::int64_t anchor : frames) {
    ObservationWindow w;
    w.scene_id = scene_id;
    w.anchor_frame = anchor;
    for (const auto& [ped, track] : tracks) {
      Trajectory past;
      Trajectory future;
      bool complete = true;
      for (int k = -(cfg.tau_obs - 1); k <= cfg.tau_pred && complete; ++k) {
        const auto it = track.find(anchor + static_cast<std::int64_t>(k) * cfg.stride);
        if (it == track.end()) {
          complete = false;
        } else if (k <= 0) {
          past.push_back(it->second);
        } else {
          future.push_back(it->second);
        }
      }
      if (!complete) continue;
      w.pedestrian_ids.push_back(ped);
      w.past.push_back(std::move(past));
      w.future.push_back(std::move(future));
    }
    if (!w.pedestrian_ids.empty()) windows.push_back(std::move(w));
  }
  return windows;
}

/// Extrapolates the last observed displacement over tau_pred steps.
inline Trajectory constant_velocity(const Trajectory& past, int tau_pred) {
  Trajectory out;
  if (past.empty()) return out;
  const Vec2 last = past.back();
  const Vec2 velocity = past.size() >= 2 ? last - past[past.size() - 2] : Vec2{};
  for (int k = 1; k <= tau_pred; ++k) out.push_back(last + velocity * static_cast<double>(k));
  return out;
}

}  // namespace guidecot::dataset
