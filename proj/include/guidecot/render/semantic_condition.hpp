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
#include "guidecot/common/raster.hpp"

namespace guidecot::render {

/// Channel 0: history heatmap. Channels 1..C: one-hot semantic classes.
struct SemanticCondition {
  Image tensor;

  Grid heatmap() const { return tensor.plane(0); }
  int semantic_channels() const noexcept { return tensor.channels() - 1; }
};

/// Concatenates the heatmap with the semantic map. A semantic map at a different resolution with the
/// same aspect ratio is resized (nearest neighbour) to the heatmap grid first.
inline SemanticCondition build_semantic_condition(const Grid& heatmap, const Image& semantic) {
  Image sem = semantic;
  if (sem.height() != heatmap.height() || sem.width() != heatmap.width()) {
    if (static_cast<long>(sem.height()) * heatmap.width() != static_cast<long>(sem.width()) * heatmap.height()) {
      throw Error(ErrorCode::dimension, "semantic map and heatmap aspect ratios differ");
    }
    sem = resize_nearest(sem, heatmap.height(), heatmap.width());
  }
  SemanticCondition out{Image(1 + sem.channels(), heatmap.height(), heatmap.width())};
  out.tensor.set_plane(0, heatmap);
  std::copy(sem.data().begin(), sem.data().end(),
            out.tensor.data().begin() + static_cast<std::ptrdiff_t>(out.tensor.plane_size()));
  return out;
}

}  // namespace guidecot::render
