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
#include <string>
#include <vector>

#include "guidecot/common/png_io.hpp"
#include "guidecot/dataset/scene.hpp"
#include "guidecot/render/draw.hpp"

namespace guidecot::eval {

using Rgb = std::array<double, 3>;

struct PlotStyle {
  int scale{4};  // output pixels per scene pixel
  Rgb past{1.0, 0.1, 0.1};
  Rgb truth{0.1, 0.9, 0.1};
  Rgb prediction{0.2, 0.4, 1.0};
  Rgb goal{1.0, 0.85, 0.0};
  double line_width{1.5};
  double marker_radius{2.0};
  double star_radius{5.0};
};

/// Scene overlay with the observed track as points, ground truth and predictions as polylines and
/// sampled goals as stars. All inputs are in world coordinates.
class Overlay {
 public:
  Overlay(const dataset::Scene& scene, PlotStyle style = {}) : scene_(&scene), style_(style) {
    if (style_.scale < 1) throw Error(ErrorCode::parameter, "plot scale must be at least 1");
    canvas_ = resize_nearest(to_rgb(scene.image), scene.height() * style_.scale, scene.width() * style_.scale);
  }

  Overlay& past(const Trajectory& world) {
    for (Vec2 p : world) disc(to_canvas(p), style_.marker_radius, style_.past);
    return *this;
  }
  Overlay& truth(const Trajectory& world) { return polyline(world, style_.truth); }
  Overlay& prediction(const Trajectory& world) { return polyline(world, style_.prediction); }

  Overlay& goal(Vec2 world) {
    const Vec2 c = to_canvas(world);
    const double r = style_.star_radius * style_.scale / 2.0;
    std::array<Vec2, 10> pts;
    for (int k = 0; k < 10; ++k) {
      const double a = -kPi / 2.0 + k * kPi / 5.0;
      const double rad = k % 2 == 0 ? r : 0.4 * r;
      pts[static_cast<std::size_t>(k)] = {c.x + rad * std::cos(a), c.y + rad * std::sin(a)};
    }
    // Star as five tip triangles plus the inner pentagon fan.
    for (int k = 0; k < 10; k += 2) {
      fill_triangle({pts[static_cast<std::size_t>((k + 9) % 10)], pts[static_cast<std::size_t>(k)],
                     pts[static_cast<std::size_t>(k + 1)]},
                    style_.goal);
      fill_triangle({c, pts[static_cast<std::size_t>(k + 1)], pts[static_cast<std::size_t>((k + 3) % 10)]}, style_.goal);
    }
    return *this;
  }

  const Image& image() const noexcept { return canvas_; }
  void save(const std::string& path) const { png::write_rgb(path, canvas_); }

 private:
  static Image to_rgb(const Image& img) {
    if (img.channels() == 3) return img;
    Image out(3, img.height(), img.width());
    for (int c = 0; c < 3; ++c) out.set_plane(c, img.plane(0));
    return out;
  }

  Vec2 to_canvas(Vec2 world) const {
    const Vec2 p = scene_->homography.world_to_pixel(world);
    const double s = style_.scale;
    return {(p.x + 0.5) * s - 0.5, (p.y + 0.5) * s - 0.5};
  }

  template <typename Coverage>
  void paint(double x0, double y0, double x1, double y1, const Rgb& color, Coverage coverage) {
    const int c0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int c1 = std::min(canvas_.width() - 1, static_cast<int>(std::ceil(x1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int r1 = std::min(canvas_.height() - 1, static_cast<int>(std::ceil(y1)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double a = coverage(Vec2{static_cast<double>(c), static_cast<double>(r)});
        if (a <= 0.0) continue;
        for (int ch = 0; ch < 3; ++ch) {
          double& v = canvas_.at(ch, r, c);
          v = (1.0 - a) * v + a * color[static_cast<std::size_t>(ch)];
        }
      }
    }
  }

  void disc(Vec2 c, double radius, const Rgb& color) {
    const double r = radius * style_.scale / 2.0;
    paint(c.x - r - 1, c.y - r - 1, c.x + r + 1, c.y + r + 1, color,
          [&](Vec2 p) { return render::disc_coverage(p, c, r); });
  }

  void fill_triangle(const std::array<Vec2, 3>& tri, const Rgb& color) {
    const double x0 = std::min({tri[0].x, tri[1].x, tri[2].x}) - 1;
    const double x1 = std::max({tri[0].x, tri[1].x, tri[2].x}) + 1;
    const double y0 = std::min({tri[0].y, tri[1].y, tri[2].y}) - 1;
    const double y1 = std::max({tri[0].y, tri[1].y, tri[2].y}) + 1;
    paint(x0, y0, x1, y1, color, [&](Vec2 p) { return render::triangle_coverage(p, tri); });
  }

  Overlay& polyline(const Trajectory& world, const Rgb& color) {
    const double w = style_.line_width * style_.scale / 2.0;
    for (std::size_t k = 1; k < world.size(); ++k) {
      const Vec2 a = to_canvas(world[k - 1]);
      const Vec2 b = to_canvas(world[k]);
      paint(std::min(a.x, b.x) - w - 1, std::min(a.y, b.y) - w - 1, std::max(a.x, b.x) + w + 1,
            std::max(a.y, b.y) + w + 1, color, [&](Vec2 p) { return render::stroke_coverage(p, a, b, w); });
    }
    if (world.size() == 1) disc(to_canvas(world[0]), style_.line_width, color);
    return *this;
  }

  const dataset::Scene* scene_;
  PlotStyle style_;
  Image canvas_;
};

}  // namespace guidecot::eval
