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
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "guidecot/service/session.hpp"

namespace guidecot::service {

inline constexpr int kSchemaVersion = 1;

/// Handler failure mapped to an HTTP status.
struct ApiError {
  int status{500};
  nlohmann::json body;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::parameter:
    case ErrorCode::input:
    case ErrorCode::parse:
    case ErrorCode::out_of_bounds:
    case ErrorCode::degenerate_heading:
    case ErrorCode::degenerate_distribution:
      return 400;
    case ErrorCode::reference: return 404;
    case ErrorCode::unavailable: return 503;
    default: return 500;
  }
}

inline ApiError to_api_error(const Error& e) {
  return {http_status(e.code()), {{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}}};
}

struct PredictRequest {
  std::string window_id;
  int pedestrian{0};
  int k{0};
  std::optional<std::uint64_t> seed;
  std::optional<guidance::GuidanceSpec> guidance;
  bool full_resolution{false};

  nlohmann::json to_json() const {
    nlohmann::json j{{"window_id", window_id}, {"pedestrian", pedestrian}, {"k", k}, {"full_resolution", full_resolution}};
    if (seed) j["seed"] = *seed;
    if (guidance) j["guidance"] = *guidance;
    return j;
  }
};

/// Strict request parse; errors name the offending field.
inline PredictRequest parse_predict_request(const nlohmann::json& j, bool guided, int default_k) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object");
  static const std::set<std::string> known{"schema_version", "window_id", "pedestrian", "k", "seed", "guidance",
                                           "full_resolution"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::validation, "unknown request field '" + key + "'");
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion) {
    throw Error(ErrorCode::validation, "'schema_version' must be " + std::to_string(kSchemaVersion));
  }
  PredictRequest r;
  if (!j.contains("window_id") || !j["window_id"].is_string()) throw Error(ErrorCode::validation, "'window_id' must be a string");
  r.window_id = j["window_id"].get<std::string>();
  if (!j.contains("pedestrian") || !j["pedestrian"].is_number_integer()) {
    throw Error(ErrorCode::validation, "'pedestrian' must be an integer index");
  }
  r.pedestrian = j["pedestrian"].get<int>();
  r.k = default_k;
  if (j.contains("k")) {
    if (!j["k"].is_number_integer() || j["k"].get<int>() < 1 || j["k"].get<int>() > 256) {
      throw Error(ErrorCode::validation, "'k' must be an integer in [1, 256]");
    }
    r.k = j["k"].get<int>();
  }
  if (j.contains("seed")) {
    const auto& seed = j["seed"];
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw Error(ErrorCode::validation, "'seed' must be a non-negative integer");
    }
    r.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("full_resolution")) {
    if (!j["full_resolution"].is_boolean()) throw Error(ErrorCode::validation, "'full_resolution' must be a boolean");
    r.full_resolution = j["full_resolution"].get<bool>();
  }
  if (guided) {
    if (!j.contains("guidance")) throw Error(ErrorCode::validation, "'guidance' is required");
    try {
      r.guidance = guidance::parse_spec(j["guidance"]);
    } catch (const Error& e) {
      throw Error(ErrorCode::validation, std::string("guidance: ") + e.what());
    }
  } else if (j.contains("guidance")) {
    throw Error(ErrorCode::validation, "'guidance' is only accepted by /guided_predict");
  }
  return r;
}

/// Block-average pooling so that neither side exceeds `max_side`. Averages of values in (0, 1) stay in (0, 1).
inline Grid pool_to(const Grid& g, int max_side) {
  const int f = std::max(1, (std::max(g.height(), g.width()) + max_side - 1) / max_side);
  if (f == 1) return g;
  const int h = (g.height() + f - 1) / f;
  const int w = (g.width() + f - 1) / f;
  Grid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double total = 0.0;
      int n = 0;
      for (int y = r * f; y < std::min(g.height(), (r + 1) * f); ++y)
        for (int x = c * f; x < std::min(g.width(), (c + 1) * f); ++x, ++n) total += g.at(y, x);
      out.at(r, c) = total / n;
    }
  }
  return out;
}

inline nlohmann::json point_json(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }

inline nlohmann::json track_json(const Trajectory& t) {
  nlohmann::json out = nlohmann::json::array();
  for (Vec2 p : t) out.push_back(point_json(p));
  return out;
}

inline nlohmann::json checkpoints_json(const LoadedModels& m) { return {{"goal", m.goal_hash}, {"llm", m.llm_hash}}; }

/// Request/response pair as persisted; the request carries the effective seed.
struct Exchange {
  nlohmann::json request;
  nlohmann::json response;
  nlohmann::json checkpoints;
};

class Api {
 public:
  explicit Api(SessionState& session) : session_(&session) {}

  SessionState& session() noexcept { return *session_; }

  nlohmann::json health() const {
    nlohmann::json j{{"status", "ok"}, {"schema_version", kSchemaVersion}, {"loaded", session_->loaded()}};
    if (session_->loaded()) {
      const auto models = session_->lease();
      j["checkpoints"] = checkpoints_json(*models);
    } else {
      j["checkpoints"] = nullptr;
    }
    return j;
  }

  nlohmann::json scenes() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& sd : session_->data().scenes) {
      const auto& s = sd.scene;
      std::array<double, 9> h = s.homography.to_array();
      out.push_back({{"id", s.scene_id},
                     {"group", s.group},
                     {"height", s.height()},
                     {"width", s.width()},
                     {"windows", session_->windows_of(s.scene_id).size()},
                     {"homography", h}});
    }
    return {{"schema_version", kSchemaVersion}, {"scenes", out}};
  }

  nlohmann::json windows(const std::string& scene_id) const {
    const auto& scene = session_->data().scene(scene_id);
    nlohmann::json out = nlohmann::json::array();
    for (const auto* w : session_->windows_of(scene_id)) {
      nlohmann::json peds = nlohmann::json::array();
      for (int i = 0; i < w->size(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Trajectory pixels;
        for (Vec2 p : w->past[ui]) pixels.push_back(scene.homography.world_to_pixel(p));
        peds.push_back({{"index", i},
                        {"id", w->pedestrian_ids[ui]},
                        {"past_world", track_json(w->past[ui])},
                        {"past_pixel", track_json(pixels)},
                        {"future_world", track_json(w->future[ui])}});
      }
      out.push_back({{"id", w->id()}, {"anchor_frame", w->anchor_frame}, {"pedestrians", peds}});
    }
    return {{"schema_version", kSchemaVersion}, {"scene_id", scene_id}, {"windows", out}};
  }

  std::vector<std::uint8_t> scene_image(const std::string& scene_id) const { return *session_->scene_png(scene_id); }

  /// /predict (guided = false) and /guided_predict (guided = true).
  Exchange predict(const nlohmann::json& body, bool guided) const {
    PredictRequest req = parse_predict_request(body, guided, session_->config().default_k);
    if (!req.seed) req.seed = fresh_seed();
    const auto models = session_->lease();
    const auto& w = session_->window(req.window_id);
    if (req.pedestrian < 0 || req.pedestrian >= w.size()) {
      throw Error(ErrorCode::reference, "'pedestrian' " + std::to_string(req.pedestrian) + " is not in window '" +
                                            req.window_id + "'");
    }
    const auto& scene = session_->data().scene(w.scene_id);
    const auto logits = session_->unguided_logits(models, w, req.pedestrian);

    PredictOptions opts;
    opts.sampling.k = req.k;
    opts.guidance = req.guidance;
    opts.seed = *req.seed;
    const auto pred = models->pipeline().predict_from_logits(scene, w, req.pedestrian, *logits, opts);

    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : pred.items) {
      Trajectory pixels;
      for (Vec2 p : item.generation.trajectory) pixels.push_back(scene.homography.world_to_pixel(p));
      items.push_back({{"world", track_json(item.generation.trajectory)},
                       {"pixel", track_json(pixels)},
                       {"goal",
                        {{"world", point_json(item.goal.world)},
                         {"pixel", point_json(item.goal.pixel)},
                         {"grid", point_json(item.goal.grid)},
                         {"score", item.goal.score}}},
                       {"cot", item.cot},
                       {"status", item.generation.fallback ? "fallback" : "ok"},
                       {"attempts", item.generation.attempts},
                       {"error", item.generation.error}});
    }
    const Grid shown = req.full_resolution ? pred.prob.prob : pool_to(pred.prob.prob, session_->config().max_grid);
    nlohmann::json response{{"schema_version", kSchemaVersion},
                            {"window_id", req.window_id},
                            {"pedestrian", req.pedestrian},
                            {"pedestrian_id", w.pedestrian_ids[static_cast<std::size_t>(req.pedestrian)]},
                            {"seed", *req.seed},
                            {"k", req.k},
                            {"tau_pred", w.tau_pred()},
                            {"checkpoints", checkpoints_json(*models)},
                            {"trajectories", items},
                            {"grid",
                             {{"height", shown.height()},
                              {"width", shown.width()},
                              {"source_height", pred.prob.prob.height()},
                              {"source_width", pred.prob.prob.width()},
                              {"values", shown.data()}}}};
    return {req.to_json(), std::move(response), checkpoints_json(*models)};
  }

  nlohmann::json reload(const nlohmann::json& body) {
    if (!body.is_null() && !body.is_object()) throw Error(ErrorCode::validation, "reload body must be a JSON object");
    std::string goal_path = session_->config().goal_checkpoint;
    std::string llm_path = session_->config().llm_checkpoint;
    if (body.is_object()) {
      for (const auto& [key, value] : body.items()) {
        if (key != "goal_checkpoint" && key != "llm_checkpoint") {
          throw Error(ErrorCode::validation, "unknown reload field '" + key + "'");
        }
        if (!value.is_string()) throw Error(ErrorCode::validation, "'" + key + "' must be a string");
      }
      goal_path = body.value("goal_checkpoint", goal_path);
      llm_path = body.value("llm_checkpoint", llm_path);
    }
    if (goal_path.empty() || llm_path.empty()) throw Error(ErrorCode::validation, "reload needs both checkpoint paths");
    session_->reload(goal_path, llm_path);
    return health();
  }

 private:
  /// Kept below 2^53 so browser clients can echo it back exactly.
  static std::uint64_t fresh_seed() {
    static std::mutex mutex;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(mutex);
    return gen() >> 11;
  }

  SessionState* session_;
};

}  // namespace guidecot::service
