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

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/common/raster.hpp"
#include "guidecot/render/draw.hpp"

namespace guidecot::render {

enum class PromptColor { red, green, blue };
enum class PromptShape { arrow, points };

NLOHMANN_JSON_SERIALIZE_ENUM(PromptColor, {{PromptColor::red, "red"},
                                           {PromptColor::green, "green"},
                                           {PromptColor::blue, "blue"}})
NLOHMANN_JSON_SERIALIZE_ENUM(PromptShape, {{PromptShape::arrow, "arrow"}, {PromptShape::points, "points"}})

/// Appearance of the trajectory marker drawn onto the scene image.
struct VisualPromptStyle {
  PromptColor color{PromptColor::red};
  PromptShape shape{PromptShape::arrow};
  double alpha{0.8};
  double line_width{3.0};
  double arrowhead_size{9.0};
  double point_radius{3.0};
  bool single_segment{false};  // arrow from first to last point instead of a polyline

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::parameter, "prompt alpha must lie in [0, 1]");
    if (!(line_width > 0.0) || !(arrowhead_size > 0.0) || !(point_radius > 0.0)) {
      throw Error(ErrorCode::parameter, "prompt widths and radii must be positive");
    }
  }

  /// Rescales pixel sizes from a reference working width to `canvas_width`.
  VisualPromptStyle scaled_to(int canvas_width, int reference_width = 224) const {
    VisualPromptStyle out = *this;
    const double f = static_cast<double>(canvas_width) / reference_width;
    out.line_width *= f;
    out.arrowhead_size *= f;
    out.point_radius *= f;
    return out;
  }

  std::string name() const {
    const char* c = color == PromptColor::red ? "red" : color == PromptColor::green ? "green" : "blue";
    return std::string(c) + (shape == PromptShape::arrow ? " arrow" : " points");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VisualPromptStyle, color, shape, alpha, line_width, arrowhead_size,
                                                point_radius, single_segment)

inline std::array<double, 3> rgb(PromptColor color) {
  switch (color) {
    case PromptColor::red: return {1.0, 0.0, 0.0};
    case PromptColor::green: return {0.0, 1.0, 0.0};
    case PromptColor::blue: return {0.0, 0.0, 1.0};
  }
  return {1.0, 0.0, 0.0};
}

/// Prompt raster P with its coverage mask. Raster is zero where the mask is zero.
struct PromptLayer {
  Image raster;
  Grid mask;
};

struct VisualCondition {
  Image raster;
};

/// Rasterizes the observed track (pixel coordinates) as an arrow or a set of dots.
inline PromptLayer draw_prompt(const Trajectory& traj_pixels, const VisualPromptStyle& style, int height, int width) {
  style.validate();
  if (traj_pixels.empty()) throw Error(ErrorCode::input, "empty trajectory");
  PromptLayer layer{Image(3, height, width), Grid(height, width)};

  if (style.shape == PromptShape::arrow) {
    Trajectory pts = traj_pixels;
    if (style.single_segment) pts = {traj_pixels.front(), traj_pixels.back()};
    // Heading from the last segment with nonzero length.
    Vec2 dir{};
    for (std::size_t i = pts.size(); i-- > 1;) {
      const Vec2 d = pts[i] - pts[i - 1];
      if (d.norm() > 1e-9) {
        dir = d / d.norm();
        break;
      }
    }
    if (dir.norm() == 0.0) throw Error(ErrorCode::degenerate_heading, "arrow prompt needs two distinct points");
    const Vec2 tip = pts.back();
    const Vec2 normal{-dir.y, dir.x};
    const double s = style.arrowhead_size;
    const std::array<Vec2, 3> head{tip, tip - dir * s + normal * (s / 2.0), tip - dir * s - normal * (s / 2.0)};
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const Vec2 p{static_cast<double>(c), static_cast<double>(r)};
        double cov = triangle_coverage(p, head);
        for (std::size_t i = 1; i < pts.size() && cov < 1.0; ++i) {
          cov = std::max(cov, stroke_coverage(p, pts[i - 1], pts[i], style.line_width));
        }
        layer.mask.at(r, c) = cov;
      }
    }
  } else {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const Vec2 p{static_cast<double>(c), static_cast<double>(r)};
        double cov = 0.0;
        for (const auto& q : traj_pixels) cov = std::max(cov, disc_coverage(p, q, style.point_radius));
        layer.mask.at(r, c) = cov;
      }
    }
  }

  const auto color = rgb(style.color);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (layer.mask.at(r, c) > 0.0) {
        for (int ch = 0; ch < 3; ++ch) layer.raster.at(ch, r, c) = color[static_cast<std::size_t>(ch)];
      }
    }
  }
  return layer;
}

/// Alpha-composites the prompt over the scene. Where the mask is partial, the prompt pixel is the
/// coverage-weighted mix of prompt colour and scene; where the mask is zero the scene passes through.
inline VisualCondition composite(const Image& scene, const PromptLayer& layer, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::parameter, "alpha must lie in [0, 1]");
  if (!scene.same_shape(layer.raster) || scene.height() != layer.mask.height() ||
      scene.width() != layer.mask.width()) {
    throw Error(ErrorCode::dimension, "scene and prompt layer shapes differ");
  }
  VisualCondition out{scene};
  for (int r = 0; r < scene.height(); ++r) {
    for (int c = 0; c < scene.width(); ++c) {
      const double m = layer.mask.at(r, c);
      if (m == 0.0) continue;
      for (int ch = 0; ch < scene.channels(); ++ch) {
        const double s = scene.at(ch, r, c);
        const double p = m * layer.raster.at(ch, r, c) + (1.0 - m) * s;
        out.raster.at(ch, r, c) = std::clamp((1.0 - alpha) * s + alpha * p, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace guidecot::render
