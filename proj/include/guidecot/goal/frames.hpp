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

#include <cmath>

#include <json.hpp>

#include "guidecot/common/geometry.hpp"
#include "guidecot/dataset/homography.hpp"

namespace guidecot::goal {

/// Working resolutions of the two goal-module branches.
struct Resolution {
  int encoder_height{224};
  int encoder_width{224};
  int grid_height{128};
  int grid_width{128};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Resolution, encoder_height, encoder_width, grid_height, grid_width)

/// Maps between scene pixels, encoder pixels and goal-grid cells for one scene.
/// All rasters use pixel-center alignment: integer coordinates sit at pixel centers.
struct FrameMap {
  int scene_height{0};
  int scene_width{0};
  Resolution res;

  static Vec2 rescale(Vec2 p, double from_w, double from_h, double to_w, double to_h) {
    return {(p.x + 0.5) * to_w / from_w - 0.5, (p.y + 0.5) * to_h / from_h - 0.5};
  }

  Vec2 scene_to_grid(Vec2 px) const {
    return rescale(px, scene_width, scene_height, res.grid_width, res.grid_height);
  }
  Vec2 grid_to_scene(Vec2 g) const {
    return rescale(g, res.grid_width, res.grid_height, scene_width, scene_height);
  }
  Vec2 scene_to_encoder(Vec2 px) const {
    return rescale(px, scene_width, scene_height, res.encoder_width, res.encoder_height);
  }

  Vec2 world_to_grid(Vec2 world, const dataset::Homography& h) const { return scene_to_grid(h.world_to_pixel(world)); }
  Vec2 grid_to_world(Vec2 g, const dataset::Homography& h) const { return h.pixel_to_world(grid_to_scene(g)); }

  bool cell_in_grid(int row, int col) const {
    return row >= 0 && col >= 0 && row < res.grid_height && col < res.grid_width;
  }
  /// Nearest cell (row, col) to a continuous grid coordinate.
  static std::pair<int, int> cell_of(Vec2 g) {
    return {static_cast<int>(std::lround(g.y)), static_cast<int>(std::lround(g.x))};
  }
};

}  // namespace guidecot::goal
