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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "guidecot/goal/training.hpp"

using namespace guidecot;
using namespace guidecot::goal;

TEST(Frames, PixelCenterRescaling) {
  const FrameMap f{80, 160, {64, 128, 32, 64}};
  const Vec2 g = f.scene_to_grid({0.0, 0.0});
  EXPECT_DOUBLE_EQ(g.x, 0.5 * 64.0 / 160.0 - 0.5);
  EXPECT_DOUBLE_EQ(g.y, 0.5 * 32.0 / 80.0 - 0.5);
  const Vec2 center = f.scene_to_grid({79.5, 39.5});
  EXPECT_DOUBLE_EQ(center.x, 31.5);
  EXPECT_DOUBLE_EQ(center.y, 15.5);
  Rng rng(51);
  const auto h = dataset::Homography::scale(10);
  for (int n = 0; n < 100; ++n) {
    const Vec2 w{uniform(rng, 0, 16), uniform(rng, 0, 8)};
    const Vec2 back = f.grid_to_world(f.world_to_grid(w, h), h);
    EXPECT_NEAR(back.x, w.x, 1e-12);
    EXPECT_NEAR(back.y, w.y, 1e-12);
  }
  EXPECT_EQ(FrameMap::cell_of({2.4, 7.6}), std::make_pair(8, 2));
  EXPECT_TRUE(f.cell_in_grid(31, 63));
  EXPECT_FALSE(f.cell_in_grid(32, 0));
}

TEST(Target, BumpAtFinalCell) {
  const FrameMap f{80, 80, {32, 32, 16, 16}};
  const auto h = dataset::Homography::scale(10);
  const auto t = make_goal_target({4.0, 2.0}, f, h, 1.0);  // pixel (40, 20) -> grid (7.6, 3.6)
  EXPECT_TRUE(t.in_bounds);
  EXPECT_EQ(t.row, 4);
  EXPECT_EQ(t.col, 8);
  EXPECT_DOUBLE_EQ(t.grid.at(4, 8), 1.0);
  EXPECT_NEAR(t.grid.at(4, 9), std::exp(-0.5), 1e-12);
  EXPECT_DOUBLE_EQ(t.grid.max(), 1.0);
  const auto outside = make_goal_target({-3.0, 2.0}, f, h, 1.0);
  EXPECT_FALSE(outside.in_bounds);
  EXPECT_DOUBLE_EQ(outside.grid.max(), 0.0);
  EXPECT_THROW(make_goal_target({4.0, 2.0}, f, h, 0.0), Error);
}

TEST(GoalPredictor, ShapesAndDeterminism) {
  const auto& data = fixtures::tiny_data();
  const GoalPredictor model(fixtures::tiny_goal_config());
  const auto& w = *std::find_if(data.windows.begin(), data.windows.end(), [](const auto& x) { return x.size() >= 2; });
  const auto& scene = data.scene(w.scene_id);
  const auto a = model.predict_logits(model.prepare(scene, w.past[0]));
  const auto b = model.predict_logits(model.prepare(scene, w.past[0]));
  EXPECT_EQ(a.logits.height(), 16);
  EXPECT_EQ(a.logits.width(), 16);
  EXPECT_EQ(a.logits, b.logits);
  const auto batch = model.predict_logits_batch({model.prepare(scene, w.past[0]), model.prepare(scene, w.past[1])});
  ASSERT_EQ(batch.size(), 2u);
  EXPECT_EQ(batch[0].logits, a.logits);
}

TEST(GoalPredictor, CheckpointRoundTrip) {
  fixtures::TempDir dir("goal");
  const auto& data = fixtures::tiny_data();
  GoalPredictor model(fixtures::tiny_goal_config());
  auto items = make_goal_items(model, data, {data.windows.begin(), data.windows.begin() + 2});
  GoalTrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  train_goal_module(model, items, cfg);
  model.save(dir.file("g.json"));
  const auto back = GoalPredictor::load(dir.file("g.json"));
  EXPECT_EQ(back.weights_hash(), model.weights_hash());
  EXPECT_EQ(back.predict_logits(items[0].inputs).logits, model.predict_logits(items[0].inputs).logits);

  auto j = model.checkpoint_json();
  j["version"] = 99;
  EXPECT_THROW(GoalPredictor::from_json(j), Error);
  j = model.checkpoint_json();
  j["encoder_weights_hash"] = "0000";
  EXPECT_THROW(GoalPredictor::from_json(j), Error);
  EXPECT_THROW(GoalPredictor::load(dir.file("none.json")), Error);
}

TEST(GoalPredictor, PretrainedBackendsNeedWeights) {
  auto cfg = fixtures::tiny_goal_config();
  cfg.encoder.backend = EncoderBackend::imagenet_resnet50;
  try {
    GoalPredictor model(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::load);
  }
  fixtures::TempDir dir("enc");
  const GoalPredictor toy(fixtures::tiny_goal_config());
  std::ofstream(dir.file("w.json")) << toy.encoder().parameters().to_json().dump();
  cfg.encoder.weights_path = dir.file("w.json");
  const GoalPredictor loaded(cfg);
  EXPECT_EQ(loaded.encoder().weights_hash(), toy.encoder().weights_hash());
}

TEST(GoalPredictor, ArchitectureErrors) {
  auto cfg = fixtures::tiny_goal_config();
  cfg.resolution = {48, 48, 16, 16};
  EXPECT_THROW(GoalPredictor{cfg}, Error);
  cfg = fixtures::tiny_goal_config();
  cfg.encoder.feature_levels = {1, 0};
  EXPECT_THROW(GoalPredictor{cfg}, Error);
  cfg = fixtures::tiny_goal_config();
  cfg.encoder.feature_levels = {0, 5};
  EXPECT_THROW(GoalPredictor{cfg}, Error);
  cfg = fixtures::tiny_goal_config();
  cfg.sigma_goal = 0.0;
  EXPECT_THROW(GoalPredictor{cfg}, Error);
}

TEST(GoalPredictor, ConditionModesChangeInputs) {
  const auto& data = fixtures::tiny_data();
  const auto& w = data.windows.front();
  const auto& scene = data.scene(w.scene_id);
  for (auto mode : {ConditionMode::both, ConditionMode::sem_only, ConditionMode::vis_only}) {
    auto cfg = fixtures::tiny_goal_config();
    cfg.unet.mode = mode;
    const GoalPredictor model(cfg);
    const auto out = model.predict_logits(model.prepare(scene, w.past[0]));
    for (double v : out.logits.data()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(GoalTraining, FrozenEncoderUnchangedAndLossFalls) {
  const auto& data = fixtures::tiny_data();
  GoalPredictor model(fixtures::tiny_goal_config());
  auto items = make_goal_items(model, data, {data.windows.begin(), data.windows.begin() + 4});
  GoalTrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  const auto report = train_goal_module(model, items, cfg);
  EXPECT_EQ(report.encoder_hash_before, report.encoder_hash_after);
  EXPECT_LT(report.final_bce(), 0.5 * report.initial_bce);
  EXPECT_NEAR(mean_goal_bce(model, items), report.final_bce(), 0.5 * report.final_bce());
  cfg.batch_size = 0;
  EXPECT_THROW(train_goal_module(model, items, cfg), Error);
  cfg.batch_size = 8;
  EXPECT_THROW(train_goal_module(model, {}, cfg), Error);
}

TEST(GoalTraining, AugmentedViewsKeepEncoderAndStillFit) {
  const auto& data = fixtures::tiny_data();
  GoalPredictor model(fixtures::tiny_goal_config());
  auto items = make_goal_items(model, data, {data.windows.begin(), data.windows.begin() + 4});
  GoalTrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.augment = true;
  const auto report = train_goal_module(model, items, cfg);
  EXPECT_EQ(report.encoder_hash_before, report.encoder_hash_after);
  EXPECT_LT(report.final_bce(), 0.5 * report.initial_bce);

  GoalPredictor plain(fixtures::tiny_goal_config());
  cfg.augment = false;
  train_goal_module(plain, items, cfg);
  EXPECT_NE(plain.unet().parameters().hash(), model.unet().parameters().hash());
}
