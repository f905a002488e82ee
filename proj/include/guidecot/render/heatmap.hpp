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
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/common/raster.hpp"

namespace guidecot::render {

/// Unnormalized isotropic gaussian bump evaluated on every cell (cell (r, c) sits at (c, r)).
inline Grid gaussian_bump(Vec2 center, double sigma, int height, int width) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::parameter, "gaussian width must be positive");
  Grid g(height, width);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int r = 0; r < height; ++r) {
    const double dy = r - center.y;
    for (int c = 0; c < width; ++c) {
      const double dx = c - center.x;
      g.at(r, c) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return g;
}

/// History heatmap: sum of per-timestep gaussians, scaled so its maximum is 1.
inline Grid render_heatmap(const Trajectory& traj, double sigma, int height, int width) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::parameter, "heatmap sigma must be positive");
  Grid out(height, width);
  for (const auto& p : traj) {
    const Grid g = gaussian_bump(p, sigma, height, width);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
  }
  const double peak = out.max();
  if (peak > 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= peak;
  }
  return out;
}

}  // namespace guidecot::render
