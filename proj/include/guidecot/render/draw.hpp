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
#include <limits>

#include "guidecot/common/geometry.hpp"

namespace guidecot::render {

/// Distance from `p` to segment [a, b].
inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + ab * t);
}

/// Anti-aliased coverage of a stroke of the given width at pixel center `p`.
inline double stroke_coverage(Vec2 p, Vec2 a, Vec2 b, double width) {
  return std::clamp(width / 2.0 + 0.5 - segment_distance(p, a, b), 0.0, 1.0);
}

inline double disc_coverage(Vec2 p, Vec2 center, double radius) {
  return std::clamp(radius + 0.5 - distance(p, center), 0.0, 1.0);
}

/// Signed distance to a triangle (negative inside).
inline double triangle_signed_distance(Vec2 p, const std::array<Vec2, 3>& tri) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) d = std::min(d, segment_distance(p, tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>((i + 1) % 3)]));
  const double c0 = cross(tri[1] - tri[0], p - tri[0]);
  const double c1 = cross(tri[2] - tri[1], p - tri[1]);
  const double c2 = cross(tri[0] - tri[2], p - tri[2]);
  const bool inside = (c0 >= 0 && c1 >= 0 && c2 >= 0) || (c0 <= 0 && c1 <= 0 && c2 <= 0);
  return inside ? -d : d;
}

inline double triangle_coverage(Vec2 p, const std::array<Vec2, 3>& tri) {
  return std::clamp(0.5 - triangle_signed_distance(p, tri), 0.0, 1.0);
}

}  // namespace guidecot::render
