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
#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/common/raster.hpp"
#include "guidecot/render/heatmap.hpp"

namespace guidecot::guidance {

// All positions and distances are in goal-grid pixels; cell (r, c) has its center at (x = c, y = r).
// Angles are counterclockwise as displayed, i.e. with the image y axis flipped to point up.

enum class GuidanceKind { none, direction, group, explicit_goal };

NLOHMANN_JSON_SERIALIZE_ENUM(GuidanceKind, {{GuidanceKind::none, "none"},
                                            {GuidanceKind::direction, "direction"},
                                            {GuidanceKind::group, "group"},
                                            {GuidanceKind::explicit_goal, "explicit_goal"}})

/// What the group field is centered on.
enum class GroupTarget { predicted_goal, ground_truth_future };

NLOHMANN_JSON_SERIALIZE_ENUM(GroupTarget, {{GroupTarget::predicted_goal, "predicted_goal"},
                                           {GroupTarget::ground_truth_future, "ground_truth_future"}})

inline constexpr double kDefaultThetaMax = kPi / 3.0;
inline constexpr double kLeft = kPi / 2.0;
inline constexpr double kRight = -kPi / 2.0;

struct GuidanceSpec {
  GuidanceKind kind{GuidanceKind::none};
  double theta{0.0};  // relative to heading
  double theta_max{kDefaultThetaMax};
  std::int64_t neighbor_id{-1};
  GroupTarget group_target{GroupTarget::predicted_goal};
  double d_max{20.0};
  std::optional<Vec2> goal_point;  // explicit_goal without a point means "stop at the current position"
  double sigma{4.0};
  double lambda{0.0};

  void validate() const {
    if (!(theta_max > 0.0) || !std::isfinite(theta_max)) throw Error(ErrorCode::validation, "theta_max must be > 0");
    if (!(d_max > 0.0) || !std::isfinite(d_max)) throw Error(ErrorCode::validation, "d_max must be > 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::validation, "sigma must be > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::validation, "lambda must be finite and >= 0");
    if (!std::isfinite(theta)) throw Error(ErrorCode::validation, "theta must be finite");
    if (goal_point && !goal_point->finite()) throw Error(ErrorCode::validation, "goal_point must be finite");
    if (kind == GuidanceKind::group && neighbor_id < 0) throw Error(ErrorCode::validation, "group guidance needs neighbor_id");
  }

  bool operator==(const GuidanceSpec& o) const {
    const bool same_goal = goal_point.has_value() == o.goal_point.has_value() &&
                           (!goal_point || (goal_point->x == o.goal_point->x && goal_point->y == o.goal_point->y));
    return kind == o.kind && theta == o.theta && theta_max == o.theta_max && neighbor_id == o.neighbor_id &&
           group_target == o.group_target && d_max == o.d_max && same_goal && sigma == o.sigma && lambda == o.lambda;
  }
};

inline GuidanceSpec left(double lambda) { return {GuidanceKind::direction, kLeft, kDefaultThetaMax, -1, {}, 20.0, {}, 4.0, lambda}; }
inline GuidanceSpec right(double lambda) { return {GuidanceKind::direction, kRight, kDefaultThetaMax, -1, {}, 20.0, {}, 4.0, lambda}; }
inline GuidanceSpec stop(double lambda) { return {GuidanceKind::explicit_goal, 0.0, kDefaultThetaMax, -1, {}, 20.0, {}, 4.0, lambda}; }

inline nlohmann::json to_json_value(const GuidanceSpec& s) {
  nlohmann::json j{{"kind", s.kind}, {"lambda", s.lambda}};
  switch (s.kind) {
    case GuidanceKind::direction:
      j["theta"] = s.theta;
      j["theta_max"] = s.theta_max;
      break;
    case GuidanceKind::group:
      j["neighbor_id"] = s.neighbor_id;
      j["d_max"] = s.d_max;
      j["group_target"] = s.group_target;
      break;
    case GuidanceKind::explicit_goal:
      if (s.goal_point) j["goal_point"] = {s.goal_point->x, s.goal_point->y};
      j["sigma"] = s.sigma;
      break;
    case GuidanceKind::none:
      break;
  }
  return j;
}

inline void to_json(nlohmann::json& j, const GuidanceSpec& s) { j = to_json_value(s); }

/// Strict parse: unknown keys, wrong types and invariant violations raise validation errors.
inline GuidanceSpec parse_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "guidance spec must be a JSON object");
  static const std::set<std::string> known{"kind", "theta", "theta_max", "neighbor_id", "group_target",
                                           "d_max", "goal_point", "sigma", "lambda"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::validation, "unknown guidance field '" + key + "'");
  }
  if (!j.contains("kind") || !j.at("kind").is_string()) throw Error(ErrorCode::validation, "guidance spec needs a string 'kind'");
  static const std::map<std::string, GuidanceKind> kinds{{"none", GuidanceKind::none},
                                                         {"direction", GuidanceKind::direction},
                                                         {"group", GuidanceKind::group},
                                                         {"explicit_goal", GuidanceKind::explicit_goal}};
  const auto kind_it = kinds.find(j.at("kind").get<std::string>());
  if (kind_it == kinds.end()) throw Error(ErrorCode::validation, "unknown guidance kind '" + j.at("kind").get<std::string>() + "'");

  GuidanceSpec s;
  s.kind = kind_it->second;
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return false;
    if (!j.at(key).is_number()) throw Error(ErrorCode::validation, std::string("'") + key + "' must be a number");
    out = j.at(key).get<double>();
    return true;
  };
  number("theta", s.theta);
  number("theta_max", s.theta_max);
  number("d_max", s.d_max);
  number("sigma", s.sigma);
  number("lambda", s.lambda);
  if (j.contains("neighbor_id")) {
    if (!j.at("neighbor_id").is_number_integer()) throw Error(ErrorCode::validation, "'neighbor_id' must be an integer");
    s.neighbor_id = j.at("neighbor_id").get<std::int64_t>();
  }
  if (j.contains("group_target")) {
    const auto& t = j.at("group_target");
    if (t == "predicted_goal") s.group_target = GroupTarget::predicted_goal;
    else if (t == "ground_truth_future") s.group_target = GroupTarget::ground_truth_future;
    else throw Error(ErrorCode::validation, "'group_target' must be predicted_goal or ground_truth_future");
  }
  if (j.contains("goal_point")) {
    const auto& g = j.at("goal_point");
    if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
      throw Error(ErrorCode::validation, "'goal_point' must be [x, y]");
    }
    s.goal_point = Vec2{g[0].get<double>(), g[1].get<double>()};
  }
  if (s.kind == GuidanceKind::direction && !j.contains("theta")) throw Error(ErrorCode::validation, "direction guidance needs 'theta'");
  s.validate();
  return s;
}

inline void from_json(const nlohmann::json& j, GuidanceSpec& s) { s = parse_spec(j); }

/// JSON Schema (draft 2020-12) of the serialized GuidanceSpec.
inline nlohmann::json spec_schema() {
  return nlohmann::json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "GuidanceSpec",
  "type": "object",
  "additionalProperties": false,
  "required": ["kind"],
  "properties": {
    "kind": {"enum": ["none", "direction", "group", "explicit_goal"]},
    "theta": {"type": "number"},
    "theta_max": {"type": "number", "exclusiveMinimum": 0},
    "neighbor_id": {"type": "integer", "minimum": 0},
    "group_target": {"enum": ["predicted_goal", "ground_truth_future"]},
    "d_max": {"type": "number", "exclusiveMinimum": 0},
    "goal_point": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    "sigma": {"type": "number", "exclusiveMinimum": 0},
    "lambda": {"type": "number", "minimum": 0}
  },
  "allOf": [
    {"if": {"properties": {"kind": {"const": "direction"}}}, "then": {"required": ["theta"]}},
    {"if": {"properties": {"kind": {"const": "group"}}}, "then": {"required": ["neighbor_id"]}}
  ]
})");
}

/// Display-frame angle of a grid-space vector.
inline double display_angle(Vec2 v) { return std::atan2(-v.y, v.x); }

/// Heading from the last two observed positions (grid pixels).
inline double heading_from(const Trajectory& past) {
  if (past.size() < 2) throw Error(ErrorCode::degenerate_heading, "heading needs two observed positions");
  const Vec2 d = past.back() - past[past.size() - 2];
  if (d.norm() == 0.0) throw Error(ErrorCode::degenerate_heading, "last two observed positions coincide");
  return display_angle(d);
}

/// max(0, 1 - |theta - theta_p| / theta_max), theta_p the cell angle relative to the heading.
inline Grid direction_field(Vec2 current, double heading, double theta, double theta_max, int height, int width) {
  if (!(theta_max > 0.0)) throw Error(ErrorCode::parameter, "theta_max must be > 0");
  if (!std::isfinite(heading)) throw Error(ErrorCode::degenerate_heading, "heading is not finite");
  Grid g(height, width);
  const long own_r = std::lround(current.y);
  const long own_c = std::lround(current.x);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (r == own_r && c == own_c) continue;
      const Vec2 v{c - current.x, r - current.y};
      if (v.norm() == 0.0) continue;
      const double theta_p = wrap_angle(display_angle(v) - heading);
      g.at(r, c) = std::max(0.0, 1.0 - std::abs(wrap_angle(theta - theta_p)) / theta_max);
    }
  }
  return g;
}

/// max(0, 1 - d_p / d_max), d_p the distance from the cell to the neighbor's goal.
inline Grid group_field(Vec2 neighbor_goal, double d_max, int height, int width) {
  if (!(d_max > 0.0)) throw Error(ErrorCode::parameter, "d_max must be > 0");
  Grid g(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      g.at(r, c) = std::max(0.0, 1.0 - distance({static_cast<double>(c), static_cast<double>(r)}, neighbor_goal) / d_max);
    }
  }
  return g;
}

inline Grid explicit_goal_field(Vec2 goal, double sigma, int height, int width) {
  if (!(goal.x >= -0.5 && goal.y >= -0.5 && goal.x < width - 0.5 && goal.y < height - 0.5)) {
    throw Error(ErrorCode::out_of_bounds, "goal point outside the goal grid");
  }
  return render::gaussian_bump(goal, sigma, height, width);
}

/// Pedestrian-specific inputs needed to build a field.
struct GuidanceContext {
  int height{0};
  int width{0};
  Trajectory past;                           // observed track, grid pixels
  std::map<std::int64_t, Vec2> neighbor_goals;   // predicted goals of neighbors, grid pixels
  std::map<std::int64_t, Vec2> neighbor_futures; // ground-truth final positions, grid pixels
};

inline Grid build_field(const GuidanceSpec& spec, const GuidanceContext& ctx) {
  spec.validate();
  switch (spec.kind) {
    case GuidanceKind::none:
      return Grid(ctx.height, ctx.width);
    case GuidanceKind::direction:
      if (ctx.past.empty()) throw Error(ErrorCode::input, "direction guidance needs the observed track");
      return direction_field(ctx.past.back(), heading_from(ctx.past), spec.theta, spec.theta_max, ctx.height, ctx.width);
    case GuidanceKind::group: {
      const auto& source = spec.group_target == GroupTarget::predicted_goal ? ctx.neighbor_goals : ctx.neighbor_futures;
      const auto it = source.find(spec.neighbor_id);
      if (it == source.end()) {
        throw Error(ErrorCode::reference, "unknown neighbor " + std::to_string(spec.neighbor_id) + " for group guidance");
      }
      return group_field(it->second, spec.d_max, ctx.height, ctx.width);
    }
    case GuidanceKind::explicit_goal: {
      if (!spec.goal_point && ctx.past.empty()) throw Error(ErrorCode::input, "stop guidance needs the observed track");
      return explicit_goal_field(spec.goal_point.value_or(ctx.past.back()), spec.sigma, ctx.height, ctx.width);
    }
  }
  throw Error(ErrorCode::validation, "unhandled guidance kind");
}

}  // namespace guidecot::guidance
