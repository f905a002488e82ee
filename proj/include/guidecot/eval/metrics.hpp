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

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"

namespace guidecot::eval {

inline void check_pair(const Trajectory& pred, const Trajectory& gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::dimension, "prediction has " + std::to_string(pred.size()) + " steps, ground truth " +
                                          std::to_string(gt.size()));
  }
  if (gt.empty()) throw Error(ErrorCode::dimension, "empty trajectory");
}

/// Mean pointwise euclidean distance.
inline double ade(const Trajectory& pred, const Trajectory& gt) {
  check_pair(pred, gt);
  double total = 0.0;
  for (std::size_t t = 0; t < gt.size(); ++t) total += distance(pred[t], gt[t]);
  return total / static_cast<double>(gt.size());
}

/// Euclidean distance at the final step.
inline double fde(const Trajectory& pred, const Trajectory& gt) {
  check_pair(pred, gt);
  return distance(pred.back(), gt.back());
}

/// How the best of K candidates is chosen.
enum class Selection { min_ade, min_fde, independent };

NLOHMANN_JSON_SERIALIZE_ENUM(Selection, {{Selection::min_ade, "min_ade"},
                                         {Selection::min_fde, "min_fde"},
                                         {Selection::independent, "independent"}})

struct BestOfK {
  double ade{0.0};
  double fde{0.0};
  int index{0};  // selected candidate (for independent minima: the min-ADE one)
};

inline BestOfK best_of_k(const std::vector<Trajectory>& preds, const Trajectory& gt, Selection rule = Selection::min_ade) {
  if (preds.empty()) throw Error(ErrorCode::input, "best-of-K needs at least one prediction");
  BestOfK best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0};
  double best_fde_any = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double a = ade(preds[k], gt);
    const double f = fde(preds[k], gt);
    best_fde_any = std::min(best_fde_any, f);
    const bool better = rule == Selection::min_fde ? f < best.fde : a < best.ade;
    if (better) best = {a, f, static_cast<int>(k)};
  }
  if (rule == Selection::independent) best.fde = best_fde_any;
  return best;
}

}  // namespace guidecot::eval
