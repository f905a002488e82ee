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

#include <string>
#include <utility>

#include "guidecot/config.hpp"

namespace guidecot {

struct TrainedGoal {
  goal::GoalPredictor model;
  goal::GoalTrainReport report;
};

struct TrainedLlm {
  cot::Seq2Seq model;
  cot::LlmTrainReport report;
};

/// Goal module trained on every group except `held_out`.
inline TrainedGoal train_goal_split(const ProjectConfig& cfg, const dataset::Dataset& data, const std::string& held_out) {
  const auto split = dataset::leave_one_out_split(data, held_out);
  goal::GoalPredictor model(cfg.goal_model);
  std::vector<std::string> excluded;
  auto items = goal::make_goal_items(model, data, split.train, &excluded);
  auto report = goal::train_goal_module(model, std::move(items), cfg.goal_training);
  report.excluded = std::move(excluded);
  return {std::move(model), std::move(report)};
}

/// Sequence model trained on every group except `held_out`.
inline TrainedLlm train_llm_split(const ProjectConfig& cfg, const dataset::Dataset& data, const std::string& held_out) {
  const auto split = dataset::leave_one_out_split(data, held_out);
  cot::Seq2Seq model(cfg.llm_model);
  auto items = cot::make_llm_examples(model, data, split.train);
  auto report = cot::train_llm(model, std::move(items), cfg.llm_training);
  return {std::move(model), std::move(report)};
}

}  // namespace guidecot
