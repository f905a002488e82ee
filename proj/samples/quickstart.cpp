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

// Trains a small goal module and sequence model on synthetic scenes, then steers one
// pedestrian to the left and prints the predicted endpoints.
#include <cstdio>

#include "guidecot/common/allocator.hpp"
#include "guidecot/pipeline.hpp"
#include "guidecot/workflow.hpp"

int main() {
  using namespace guidecot;
  tune_allocator();

  ProjectConfig cfg = ProjectConfig::desk();
  cfg.goal_training.epochs = 2;
  cfg.goal_training.max_items = 200;
  cfg.llm_training.epochs = 1;
  cfg.llm_training.max_items = 200;

  const dataset::Dataset data = cfg.data.load();
  auto goal = train_goal_split(cfg, data, cfg.held_out);
  auto llm = train_llm_split(cfg, data, cfg.held_out);
  std::printf("goal BCE %.3f -> %.3f, sequence CE %.3f -> %.3f\n", goal.report.initial_bce, goal.report.final_bce(),
              llm.report.initial_ce, llm.report.final_ce());

  const Pipeline pipeline(goal.model, llm.model);
  const auto split = dataset::leave_one_out_split(data, cfg.held_out);
  const auto& window = split.test.front();
  const auto& scene = data.scene(window.scene_id);

  for (double lambda : {0.0, 4.0}) {
    PredictOptions opts;
    opts.sampling.k = 5;
    opts.guidance = guidance::left(lambda);
    opts.seed = 1;
    const auto prediction = pipeline.predict_full(scene, window, 0, opts);
    std::printf("lambda %.0f\n", lambda);
    for (const auto& item : prediction.items) {
      const Vec2 end = item.generation.trajectory.back();
      std::printf("  goal (%.2f, %.2f) m, endpoint (%.2f, %.2f) m%s\n", item.goal.world.x, item.goal.world.y, end.x,
                  end.y, item.generation.fallback ? " [fallback]" : "");
    }
  }
  return 0;
}
