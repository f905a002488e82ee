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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "guidecot/common/rng.hpp"
#include "guidecot/cot/generate.hpp"
#include "guidecot/cot/text.hpp"
#include "guidecot/cot/transformer.hpp"
#include "guidecot/dataset/scene.hpp"
#include "guidecot/dataset/windows.hpp"
#include "guidecot/goal/predictor.hpp"
#include "guidecot/goal/sampling.hpp"
#include "guidecot/guidance/guidance.hpp"

namespace guidecot {

struct PredictOptions {
  goal::SamplingConfig sampling;  // sampling.k trajectories are produced
  std::optional<guidance::GuidanceSpec> guidance;
  std::uint64_t seed{0};
};

struct PredictedTrajectory {
  goal::GoalSample goal;
  std::string cot;
  cot::GenerationResult generation;
};

struct Prediction {
  goal::GoalLogitMap logits;     // unguided
  Grid field;                    // guidance field (zeros when unguided)
  goal::GoalProbabilityMap prob; // guided probability map used for sampling
  std::vector<PredictedTrajectory> items;
};

/// Goal module and sequence model composed into the full K-sample predictor.
class Pipeline {
 public:
  Pipeline(const goal::GoalPredictor& goal_model, const cot::Seq2Seq& llm) : goal_(&goal_model), llm_(&llm) {}

  const goal::GoalPredictor& goal_model() const noexcept { return *goal_; }
  const cot::Seq2Seq& llm() const noexcept { return *llm_; }

  goal::GoalLogitMap unguided_logits(const dataset::Scene& scene, const Trajectory& past_world) const {
    return goal_->predict_logits(goal_->prepare(scene, past_world));
  }

  /// Grid position of the most probable unguided goal for a pedestrian.
  Vec2 argmax_goal(const dataset::Scene& scene, const Trajectory& past_world) const {
    const auto p = goal::goal_probability(unguided_logits(scene, past_world));
    goal::SamplingConfig cfg;
    cfg.k = 1;
    cfg.temperature = 0.0;
    return goal::sample_goals(p, cfg, 0).front().grid;
  }

  /// Guidance inputs for pedestrian i; only the neighbor named by a group spec is resolved.
  guidance::GuidanceContext context(const dataset::Scene& scene, const dataset::ObservationWindow& w, int i,
                                    const std::optional<guidance::GuidanceSpec>& spec) const {
    const auto frames = goal_->frames_for(scene);
    guidance::GuidanceContext ctx;
    ctx.height = frames.res.grid_height;
    ctx.width = frames.res.grid_width;
    for (const auto& p : w.past[static_cast<std::size_t>(i)]) ctx.past.push_back(frames.world_to_grid(p, scene.homography));
    if (spec && spec->kind == guidance::GuidanceKind::group) {
      const int j = w.index_of(spec->neighbor_id);
      if (j >= 0 && j != i) {
        const auto uj = static_cast<std::size_t>(j);
        ctx.neighbor_goals[spec->neighbor_id] = argmax_goal(scene, w.past[uj]);
        ctx.neighbor_futures[spec->neighbor_id] = frames.world_to_grid(w.future[uj].back(), scene.homography);
      }
    }
    return ctx;
  }

  /// Full prediction for pedestrian i of a window.
  Prediction predict_full(const dataset::Scene& scene, const dataset::ObservationWindow& w, int i,
                          const PredictOptions& opts) const {
    return predict_from_logits(scene, w, i, unguided_logits(scene, w.past[static_cast<std::size_t>(i)]), opts);
  }

  /// Same, reusing unguided logits computed earlier (the visual encoder is not run again).
  Prediction predict_from_logits(const dataset::Scene& scene, const dataset::ObservationWindow& w, int i,
                                 goal::GoalLogitMap logits, const PredictOptions& opts) const {
    if (i < 0 || i >= w.size()) throw Error(ErrorCode::reference, "pedestrian index outside window");
    const auto ui = static_cast<std::size_t>(i);
    Prediction out;
    out.logits = std::move(logits);
    out.field = Grid(out.logits.logits.height(), out.logits.logits.width());
    double lambda = 0.0;
    if (opts.guidance && opts.guidance->kind != guidance::GuidanceKind::none && opts.guidance->lambda != 0.0) {
      out.field = guidance::build_field(*opts.guidance, context(scene, w, i, opts.guidance));
      lambda = opts.guidance->lambda;
    }
    out.prob = goal::goal_probability(out.logits, &out.field, lambda);
    const auto frames = goal_->frames_for(scene);
    const auto goals = goal::sample_goals(out.prob, opts.sampling, derive_seed(opts.seed, 0), frames, scene.homography);

    const auto& text = llm_->config().text;
    const std::string question = cot::serialize_observation(w, i, text);
    const int tau_pred = w.tau_pred();
    for (std::size_t k = 0; k < goals.size(); ++k) {
      PredictedTrajectory item;
      item.goal = goals[k];
      item.cot = cot::make_cot_sentence(i, goals[k].pixel, tau_pred, text.cot_decimals);
      item.generation = cot::generate_with_fallback(*llm_, cot::join_prompt(question, item.cot), w.past[ui], tau_pred,
                                                    llm_->config().decode, derive_seed(opts.seed, 1000 + k));
      out.items.push_back(std::move(item));
    }
    return out;
  }

 private:
  const goal::GoalPredictor* goal_;
  const cot::Seq2Seq* llm_;
};

}  // namespace guidecot
