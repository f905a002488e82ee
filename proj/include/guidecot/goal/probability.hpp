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
#include <string>

#include "guidecot/common/error.hpp"
#include "guidecot/common/raster.hpp"

namespace guidecot::goal {

/// Raw per-cell goal logits.
struct GoalLogitMap {
  Grid logits;
};

/// Per-cell goal probability in (0, 1); cells are not jointly normalized.
struct GoalProbabilityMap {
  Grid prob;
};

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// sigmoid(logits + lambda * guidance). A null guidance field or lambda == 0 gives sigmoid(logits).
inline GoalProbabilityMap goal_probability(const GoalLogitMap& map, const Grid* guidance = nullptr, double lambda = 0.0) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw Error(ErrorCode::parameter, "guidance strength must be finite and >= 0, got " + std::to_string(lambda));
  }
  const Grid& l = map.logits;
  const bool guided = guidance != nullptr && lambda != 0.0;
  if (guided && !guidance->same_shape(l)) {
    throw Error(ErrorCode::dimension, "guidance field " + std::to_string(guidance->height()) + "x" +
                                          std::to_string(guidance->width()) + " does not match goal grid " +
                                          std::to_string(l.height()) + "x" + std::to_string(l.width()));
  }
  GoalProbabilityMap out{Grid(l.height(), l.width())};
  for (std::size_t i = 0; i < l.size(); ++i) {
    out.prob[i] = stable_sigmoid(guided ? l[i] + lambda * (*guidance)[i] : l[i]);
  }
  return out;
}

}  // namespace guidecot::goal
