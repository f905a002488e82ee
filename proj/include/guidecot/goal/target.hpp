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

#include "guidecot/common/error.hpp"
#include "guidecot/dataset/homography.hpp"
#include "guidecot/goal/frames.hpp"
#include "guidecot/render/heatmap.hpp"

namespace guidecot::goal {

struct GoalTargetMap {
  Grid grid;
  bool in_bounds{true};
  int row{0};
  int col{0};
};

/// Gaussian bump of width sigma (grid cells) centered on the cell containing the final position.
inline GoalTargetMap make_goal_target(Vec2 final_world, const FrameMap& frames, const dataset::Homography& homography,
                                      double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::parameter, "goal target sigma must be > 0");
  const Vec2 g = frames.world_to_grid(final_world, homography);
  const auto [row, col] = FrameMap::cell_of(g);
  GoalTargetMap out;
  out.row = row;
  out.col = col;
  out.in_bounds = frames.cell_in_grid(row, col);
  if (!out.in_bounds) {
    out.grid = Grid(frames.res.grid_height, frames.res.grid_width);
    return out;
  }
  out.grid = render::gaussian_bump({static_cast<double>(col), static_cast<double>(row)}, sigma, frames.res.grid_height,
                                   frames.res.grid_width);
  return out;
}

}  // namespace guidecot::goal
