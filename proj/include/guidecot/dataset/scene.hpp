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
#include <cstdint>
#include <string>
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/png_io.hpp"
#include "guidecot/common/raster.hpp"
#include "guidecot/dataset/homography.hpp"

namespace guidecot::dataset {

/// Semantic class names; the palette index of a class raster is the class id.
struct SemanticClasses {
  std::vector<std::string> names{"traversable", "obstacle", "other"};

  int count() const noexcept { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const {
    for (int i = 0; i < count(); ++i)
      if (names[static_cast<std::size_t>(i)] == name) return i;
    throw Error(ErrorCode::configuration, "unknown semantic class '" + name + "'");
  }
};

inline constexpr int kTraversableClass = 0;

struct Scene {
  std::string scene_id;
  std::string group;
  Image image;     // 3 x H x W, [0, 1]
  Image semantic;  // C x H x W, one-hot
  Homography homography;
  int frame_stride{1};

  int height() const noexcept { return image.height(); }
  int width() const noexcept { return image.width(); }

  bool in_image(Vec2 pixel) const noexcept {
    return pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x <= width() - 1.0 && pixel.y <= height() - 1.0;
  }

  /// Class id at the pixel nearest to `pixel`, or -1 outside the raster.
  int class_at(Vec2 pixel) const {
    const int c = static_cast<int>(std::lround(pixel.x));
    const int r = static_cast<int>(std::lround(pixel.y));
    if (r < 0 || c < 0 || r >= semantic.height() || c >= semantic.width()) return -1;
    for (int k = 0; k < semantic.channels(); ++k)
      if (semantic.at(k, r, c) > 0.5) return k;
    return -1;
  }
};

inline Image one_hot(const std::vector<std::uint8_t>& labels, int height, int width, int classes) {
  if (labels.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw Error(ErrorCode::dimension, "label raster size mismatch");
  }
  Image out(classes, height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int label = labels[static_cast<std::size_t>(r) * width + c];
      if (label >= classes) {
        throw Error(ErrorCode::configuration, "semantic label " + std::to_string(label) + " outside class set");
      }
      out.at(label, r, c) = 1.0;
    }
  }
  return out;
}

inline std::vector<std::uint8_t> labels_from_one_hot(const Image& semantic) {
  std::vector<std::uint8_t> labels(semantic.plane_size(), 0);
  for (int r = 0; r < semantic.height(); ++r) {
    for (int c = 0; c < semantic.width(); ++c) {
      int best = 0;
      for (int k = 1; k < semantic.channels(); ++k)
        if (semantic.at(k, r, c) > semantic.at(best, r, c)) best = k;
      labels[static_cast<std::size_t>(r) * semantic.width() + c] = static_cast<std::uint8_t>(best);
    }
  }
  return labels;
}

/// Checks the raster invariants: equal spatial dims, one-hot semantics.
inline void validate(const Scene& scene) {
  if (!scene.image.same_spatial(scene.semantic)) {
    throw Error(ErrorCode::dimension, "scene '" + scene.scene_id + "': image and semantic map sizes differ");
  }
  if (scene.image.channels() != 3) throw Error(ErrorCode::dimension, "scene image must have 3 channels");
  if (scene.frame_stride < 1) throw Error(ErrorCode::configuration, "frame_stride must be >= 1");
  for (int r = 0; r < scene.semantic.height(); ++r) {
    for (int c = 0; c < scene.semantic.width(); ++c) {
      double sum = 0.0;
      for (int k = 0; k < scene.semantic.channels(); ++k) sum += scene.semantic.at(k, r, c);
      if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::dimension, "scene '" + scene.scene_id + "': semantic channels do not sum to 1");
      }
    }
  }
}

inline Image load_semantic_png(const std::string& path, const SemanticClasses& classes) {
  const auto indexed = png::read_indexed(path);
  return one_hot(indexed.indices, indexed.height, indexed.width, classes.count());
}

inline void save_semantic_png(const std::string& path, const Image& semantic) {
  static const std::vector<std::array<std::uint8_t, 3>> base_palette{
      {200, 200, 200}, {60, 40, 30}, {60, 140, 60}, {40, 60, 160}, {160, 60, 40}, {200, 180, 60}};
  png::IndexedImage out;
  out.height = semantic.height();
  out.width = semantic.width();
  out.indices = labels_from_one_hot(semantic);
  for (int k = 0; k < semantic.channels(); ++k) {
    out.palette.push_back(base_palette[static_cast<std::size_t>(k) % base_palette.size()]);
  }
  png::write_indexed(path, out);
}

}  // namespace guidecot::dataset
