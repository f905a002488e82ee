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
#include <vector>

#include <json.hpp>

#include "guidecot/dataset/dataset.hpp"
#include "guidecot/eval/evaluate.hpp"
#include "guidecot/pipeline.hpp"

namespace guidecot::eval {

struct SteeringConfig {
  std::vector<double> lambdas{0.0, 1.0, 2.0, 4.0, 8.0};
  double temperature{1.0};  // goal distribution sharpening used for the expectations
  int max_items{0};
  int min_neighbor_distance{4};  // group items need a neighbor goal at least this many grid cells away
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SteeringConfig, lambdas, temperature, max_items, min_neighbor_distance)

struct SteeringPoint {
  double lambda{0.0};
  double left_offset{0.0};     // mean signed goal angle relative to heading, radians, counterclockwise positive
  double right_offset{0.0};
  double neighbor_distance{0.0};  // mean goal distance to the neighbor's predicted goal, grid cells
  double stop_distance{0.0};      // mean goal distance to the current position, grid cells
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SteeringPoint, lambda, left_offset, right_offset, neighbor_distance, stop_distance)

struct SteeringSweep {
  std::vector<SteeringPoint> points;
  std::size_t direction_items{0};
  std::size_t group_items{0};

  static bool monotone(const std::vector<double>& v, bool increasing) {
    for (std::size_t k = 1; k < v.size(); ++k)
      if (increasing ? !(v[k] > v[k - 1]) : !(v[k] < v[k - 1])) return false;
    return true;
  }
  std::vector<double> series(double SteeringPoint::*field) const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.*field);
    return out;
  }
  bool left_monotone() const { return monotone(series(&SteeringPoint::left_offset), true); }
  bool right_monotone() const { return monotone(series(&SteeringPoint::right_offset), false); }
  bool group_monotone() const { return monotone(series(&SteeringPoint::neighbor_distance), false); }
  bool stop_monotone() const { return monotone(series(&SteeringPoint::stop_distance), false); }

  nlohmann::json to_json() const {
    return {{"points", points}, {"direction_items", direction_items}, {"group_items", group_items},
            {"left_monotone", left_monotone()}, {"right_monotone", right_monotone()},
            {"group_monotone", group_monotone()}, {"stop_monotone", stop_monotone()}};
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "lambda,left_offset,right_offset,neighbor_distance,stop_distance\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& p : points)
      out << p.lambda << ',' << p.left_offset << ',' << p.right_offset << ',' << p.neighbor_distance << ','
          << p.stop_distance << '\n';
    return out.str();
  }
};

namespace detail {

/// Expectation of f(cell center) under the sharpened goal distribution.
template <typename F>
double expect(const goal::GoalProbabilityMap& map, double temperature, F f) {
  goal::SamplingConfig cfg;
  cfg.temperature = temperature;
  const auto w = goal::sampling_weights(map.prob, cfg);
  const int width = map.prob.width();
  double total = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (w[n] == 0.0) continue;
    const int r = static_cast<int>(n) / width;
    const int c = static_cast<int>(n) % width;
    total += w[n] * f(Vec2{static_cast<double>(c), static_cast<double>(r)});
  }
  return total;
}

}  // namespace detail

/// Sweeps guidance strength over held-out windows. Unguided logits are computed once per item.
inline SteeringSweep steering_sweep(const dataset::Dataset& data, const std::vector<dataset::ObservationWindow>& windows,
                                    const goal::GoalPredictor& model, const SteeringConfig& cfg) {
  if (cfg.lambdas.empty()) throw Error(ErrorCode::input, "steering sweep needs at least one lambda");
  struct Item {
    goal::GoalLogitMap logits;
    guidance::GuidanceContext ctx;
    Vec2 current;
    double heading{0.0};
    std::int64_t neighbor{-1};
  };
  std::vector<Item> items;
  for (const auto& [wi, i] : evaluation_items(windows, cfg.max_items)) {
    const auto& w = windows[wi];
    const auto& scene = data.scene(w.scene_id);
    const auto frames = model.frames_for(scene);
    const auto& past = w.past[static_cast<std::size_t>(i)];
    Item item;
    item.logits = model.predict_logits(model.prepare(scene, past));
    item.ctx.height = frames.res.grid_height;
    item.ctx.width = frames.res.grid_width;
    for (const auto& p : past) item.ctx.past.push_back(frames.world_to_grid(p, scene.homography));
    item.current = item.ctx.past.back();
    try {
      item.heading = guidance::heading_from(item.ctx.past);
    } catch (const Error&) {
      continue;
    }
    // Nearest other pedestrian whose predicted goal is far enough away to be a meaningful target.
    const Vec2 own = goal::sample_goals(goal::goal_probability(item.logits), {1, {}, 0.0, 1}, 0).front().grid;
    double best = 1e300;
    for (int j = 0; j < w.size(); ++j) {
      if (j == i) continue;
      const auto lj = model.predict_logits(model.prepare(scene, w.past[static_cast<std::size_t>(j)]));
      const Vec2 gj = goal::sample_goals(goal::goal_probability(lj), {1, {}, 0.0, 1}, 0).front().grid;
      const double d = distance(gj, own);
      if (d >= cfg.min_neighbor_distance && distance(gj, item.current) < best) {
        best = distance(gj, item.current);
        item.neighbor = w.pedestrian_ids[static_cast<std::size_t>(j)];
        item.ctx.neighbor_goals[item.neighbor] = gj;
      }
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw Error(ErrorCode::empty_dataset, "no usable steering items");

  SteeringSweep sweep;
  sweep.direction_items = items.size();
  for (const auto& it : items) sweep.group_items += it.neighbor >= 0 ? 1 : 0;
  for (double lambda : cfg.lambdas) {
    SteeringPoint pt;
    pt.lambda = lambda;
    for (const auto& it : items) {
      auto angle = [&](Vec2 g) {
        const Vec2 d = g - it.current;
        return d.norm() < 1e-9 ? 0.0 : wrap_angle(guidance::display_angle(d) - it.heading);
      };
      for (int side = 0; side < 2; ++side) {
        const auto spec = side == 0 ? guidance::left(lambda) : guidance::right(lambda);
        const Grid field = guidance::build_field(spec, it.ctx);
        const double a = detail::expect(goal::goal_probability(it.logits, &field, lambda), cfg.temperature, angle);
        (side == 0 ? pt.left_offset : pt.right_offset) += a;
      }
      const Grid stop_field = guidance::build_field(guidance::stop(lambda), it.ctx);
      pt.stop_distance += detail::expect(goal::goal_probability(it.logits, &stop_field, lambda), cfg.temperature,
                                         [&](Vec2 g) { return distance(g, it.current); });
      if (it.neighbor >= 0) {
        guidance::GuidanceSpec spec;
        spec.kind = guidance::GuidanceKind::group;
        spec.neighbor_id = it.neighbor;
        spec.lambda = lambda;
        const Grid field = guidance::build_field(spec, it.ctx);
        const Vec2 target = it.ctx.neighbor_goals.at(it.neighbor);
        pt.neighbor_distance += detail::expect(goal::goal_probability(it.logits, &field, lambda), cfg.temperature,
                                               [&](Vec2 g) { return distance(g, target); });
      }
    }
    const double n = static_cast<double>(items.size());
    pt.left_offset /= n;
    pt.right_offset /= n;
    pt.stop_distance /= n;
    if (sweep.group_items) pt.neighbor_distance /= static_cast<double>(sweep.group_items);
    sweep.points.push_back(pt);
  }
  return sweep;
}

}  // namespace guidecot::eval
