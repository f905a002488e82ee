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
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/dataset/dataset.hpp"

namespace guidecot::dataset {

enum class LayoutKind { corridor, plaza };

/// Synthetic scene descriptor. Distances in meters, speeds in meters per frame.
struct LayoutSpec {
  LayoutKind kind{LayoutKind::corridor};
  double width_m{8.0};
  double height_m{8.0};
  double px_per_m{10.0};
  double corridor_width_m{1.6};  // corridor: band width; plaza: exit gap width
  double junction_jitter_m{1.2};
  int num_pedestrians{20};
  int track_frames{28};
  int horizon_frames{200};  // start frames drawn from [0, horizon)
  int frame_stride{1};
  double speed_m_per_frame{0.2};
  double speed_jitter{0.1};  // relative
  double lane_offset_m{0.4};
  double position_noise_m{0.01};
  int num_pillars{3};
  double marked_exit_bias{0.6};  // chance a walker leaves through the arm whose floor is painted, visible only in the image
};

struct SyntheticScene {
  Scene scene;
  std::vector<RawAnnotation> annotations;
  std::vector<std::pair<std::int64_t, Vec2>> goals;  // final track position per pedestrian
};

namespace detail {

struct Rect {
  double x0, y0, x1, y1;
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

inline Vec2 point_along(const std::vector<Vec2>& poly, double s) {
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const double len = distance(poly[i - 1], poly[i]);
    if (s <= len || i + 1 == poly.size()) {
      const double t = len > 0.0 ? std::clamp(s / len, 0.0, 1.0) : 0.0;
      return poly[i - 1] + (poly[i] - poly[i - 1]) * t;
    }
    s -= len;
  }
  return poly.back();
}

inline double polyline_length(const std::vector<Vec2>& poly) {
  double total = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) total += distance(poly[i - 1], poly[i]);
  return total;
}

template <typename Marked>
void paint_image(Scene& scene, Rng& rng, Marked marked) {
  static constexpr std::array<std::array<double, 3>, 4> colors{{
      {0.78, 0.77, 0.74},  // traversable
      {0.30, 0.22, 0.18},  // obstacle
      {0.32, 0.55, 0.30},  // other
      {0.50, 0.50, 0.50},
  }};
  static constexpr std::array<double, 3> painted_floor{0.86, 0.70, 0.32};
  const int h = scene.semantic.height();
  const int w = scene.semantic.width();
  scene.image = Image(3, h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int cls = 0;
      for (int k = 0; k < scene.semantic.channels(); ++k)
        if (scene.semantic.at(k, r, c) > 0.5) cls = k;
      const auto& base = cls == 0 && marked(r, c) ? painted_floor : colors[static_cast<std::size_t>(std::min(cls, 3))];
      const double grain = uniform(rng, -0.04, 0.04);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(base[static_cast<std::size_t>(ch)] + grain, 0.0, 1.0);
        scene.image.at(ch, r, c) = std::round(v * 255.0) / 255.0;  // 8-bit, so PNG export is lossless
      }
    }
  }
}

}  // namespace detail

/// Deterministic synthetic scene with pedestrians walking piecewise-linear paths on traversable ground.
inline SyntheticScene synth_scene(const LayoutSpec& spec, std::uint64_t seed, const std::string& scene_id = "synth",
                                  const std::string& group = "synth") {
  if (spec.width_m <= 0.0 || spec.height_m <= 0.0 || spec.px_per_m <= 0.0 || spec.num_pedestrians < 0 ||
      spec.track_frames < 2 || spec.horizon_frames < 1 || spec.frame_stride < 1 || spec.speed_m_per_frame <= 0.0) {
    throw Error(ErrorCode::configuration, "layout dimensions must be positive");
  }
  if (!(spec.marked_exit_bias >= 0.0 && spec.marked_exit_bias <= 1.0)) {
    throw Error(ErrorCode::configuration, "marked_exit_bias must lie in [0, 1]");
  }
  const double half = spec.corridor_width_m / 2.0;
  const double margin = 0.05;
  if (spec.corridor_width_m <= 0.0 || half - spec.lane_offset_m <= margin) {
    throw Error(ErrorCode::generation, "layout has no traversable area for walking lanes");
  }

  Rng rng(seed);
  SyntheticScene out;
  Scene& scene = out.scene;
  scene.scene_id = scene_id;
  scene.group = group;
  scene.frame_stride = spec.frame_stride;
  scene.homography = Homography::scale(spec.px_per_m);
  const int width_px = static_cast<int>(std::lround(spec.width_m * spec.px_per_m));
  const int height_px = static_cast<int>(std::lround(spec.height_m * spec.px_per_m));
  scene.semantic = Image(3, height_px, width_px);

  const double cx = spec.width_m / 2.0 + uniform(rng, -spec.junction_jitter_m, spec.junction_jitter_m);
  const double cy = spec.height_m / 2.0 + uniform(rng, -spec.junction_jitter_m, spec.junction_jitter_m);
  const int marked_arm = uniform_int(rng, 0, 3);

  std::vector<detail::Rect> walkable;
  std::vector<detail::Rect> pillars;
  if (spec.kind == LayoutKind::corridor) {
    walkable.push_back({0.0, cy - half, spec.width_m, cy + half});
    walkable.push_back({cx - half, 0.0, cx + half, spec.height_m});
  } else {
    const double wall = 0.8;
    walkable.push_back({wall, wall, spec.width_m - wall, spec.height_m - wall});
    walkable.push_back({0.0, cy - half, spec.width_m, cy + half});
    walkable.push_back({cx - half, 0.0, cx + half, spec.height_m});
    for (int k = 0; k < spec.num_pillars; ++k) {
      const double px = uniform(rng, wall + 1.0, spec.width_m - wall - 1.6);
      const double py = uniform(rng, wall + 1.0, spec.height_m - wall - 1.6);
      pillars.push_back({px, py, px + 0.6, py + 0.6});
    }
  }

  const double w_m = spec.width_m;
  const double h_m = spec.height_m;
  for (int r = 0; r < height_px; ++r) {
    for (int c = 0; c < width_px; ++c) {
      const Vec2 p{c / spec.px_per_m, r / spec.px_per_m};
      bool walk = false;
      for (const auto& rect : walkable) walk = walk || rect.contains(p);
      for (const auto& pillar : pillars) walk = walk && !pillar.contains(p);
      // "other" ground in two opposite quadrants, obstacles in the rest.
      const bool other_quadrant = (p.x < cx) == (p.y < cy);
      const int cls = walk ? 0 : (other_quadrant ? 2 : 1);
      scene.semantic.at(cls, r, c) = 1.0;
    }
  }
  // Arms beyond the junction square: 0 = west, 1 = east, 2 = north (y = 0), 3 = south.
  auto arm_of = [&](Vec2 p) {
    if (std::abs(p.y - cy) <= half && std::abs(p.x - cx) > half) return p.x < cx ? 0 : 1;
    if (std::abs(p.x - cx) <= half && std::abs(p.y - cy) > half) return p.y < cy ? 2 : 3;
    return -1;
  };
  detail::paint_image(scene, rng, [&](int r, int c) {
    return spec.marked_exit_bias > 0.0 && arm_of({c / spec.px_per_m, r / spec.px_per_m}) == marked_arm;
  });

  auto traversable = [&](Vec2 world) {
    return scene.class_at(scene.homography.world_to_pixel(world)) == kTraversableClass;
  };

  auto arm_point = [&](int arm, double lane) -> Vec2 {
    switch (arm) {
      case 0: return {margin, cy + lane};
      case 1: return {w_m - margin, cy + lane};
      case 2: return {cx + lane, margin};
      default: return {cx + lane, h_m - margin};
    }
  };

  const double track_len_frames = spec.track_frames - 1;
  int attempts = 0;
  for (int ped = 0; ped < spec.num_pedestrians;) {
    if (++attempts > spec.num_pedestrians * 200) {
      throw Error(ErrorCode::generation, "could not place pedestrians on traversable ground");
    }
    const int entry = uniform_int(rng, 0, 3);
    int exit = uniform_int(rng, 0, 2);
    if (exit >= entry) ++exit;
    if (marked_arm != entry && uniform01(rng) < spec.marked_exit_bias) exit = marked_arm;
    const double ox = uniform(rng, -spec.lane_offset_m, spec.lane_offset_m);
    const double oy = uniform(rng, -spec.lane_offset_m, spec.lane_offset_m);
    const Vec2 junction{cx + ox, cy + oy};
    const double entry_lane = entry < 2 ? oy : ox;
    const double exit_lane = exit < 2 ? oy : ox;
    std::vector<Vec2> path{arm_point(entry, entry_lane)};
    if (spec.kind == LayoutKind::plaza) {
      const double wall = 0.8;
      path.push_back({uniform(rng, wall + 0.4, w_m - wall - 0.4), uniform(rng, wall + 0.4, h_m - wall - 0.4)});
    } else {
      path.push_back(junction);
    }
    path.push_back(arm_point(exit, exit_lane));

    const double speed = spec.speed_m_per_frame * (1.0 + uniform(rng, -spec.speed_jitter, spec.speed_jitter));
    const double track_len = speed * track_len_frames;
    const double total = detail::polyline_length(path);
    if (total < track_len) continue;
    const double turn_at = distance(path[0], path[1]);
    const double lo = std::max(0.0, turn_at - track_len);
    const double hi = std::min(turn_at, total - track_len);
    const double s0 = hi > lo ? uniform(rng, lo, hi) : uniform(rng, 0.0, total - track_len);

    const int start = uniform_int(rng, 0, spec.horizon_frames - 1);
    std::vector<RawAnnotation> rows;
    bool ok = true;
    for (int k = 0; k < spec.track_frames && ok; ++k) {
      Vec2 p = detail::point_along(path, s0 + speed * k);
      p.x += normal(rng, 0.0, spec.position_noise_m);
      p.y += normal(rng, 0.0, spec.position_noise_m);
      ok = traversable(p);
      rows.push_back({static_cast<std::int64_t>(start + k) * spec.frame_stride, ped, p});
    }
    if (!ok) continue;
    out.goals.emplace_back(ped, rows.back().position);
    out.annotations.insert(out.annotations.end(), rows.begin(), rows.end());
    ++ped;
  }
  if (!out.annotations.empty()) canonicalize(out.annotations);
  return out;
}

/// Several synthetic scenes, one per group, for leave-one-out benchmarking.
inline Dataset synth_dataset(const LayoutSpec& spec, std::uint64_t seed, int num_scenes,
                             const WindowConfig& window_config = {}) {
  Dataset data;
  data.groups.clear();
  data.window_config = window_config;
  for (int k = 0; k < num_scenes; ++k) {
    const std::string id = "synth" + std::to_string(k);
    auto s = synth_scene(spec, derive_seed(seed, static_cast<std::uint64_t>(k)), id, id);
    data.groups.push_back(id);
    data.scenes.push_back({std::move(s.scene), std::move(s.annotations)});
  }
  data.rebuild_windows();
  return data;
}

}  // namespace guidecot::dataset
