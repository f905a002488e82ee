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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/log.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/dataset/dataset.hpp"
#include "guidecot/goal/predictor.hpp"
#include "guidecot/goal/target.hpp"
#include "guidecot/nn/module.hpp"

namespace guidecot::goal {

struct GoalTrainConfig {
  int epochs{50};
  int batch_size{64};
  double learning_rate{1e-4};
  double lr_floor_ratio{0.0};
  int warmup_steps{0};
  double clip_norm{1.0};
  double weight_decay{0.0};
  std::uint64_t seed{0};
  int max_items{0};  // 0 keeps every (window, pedestrian) pair
  bool augment{false};  // random flips/transposes of image, semantic tensor and target per item and epoch
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GoalTrainConfig, epochs, batch_size, learning_rate, lr_floor_ratio,
                                                warmup_steps, clip_norm, weight_decay, seed, max_items, augment)

struct CurvePoint {
  int epoch{0};
  double bce{0.0};
  double learning_rate{0.0};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CurvePoint, epoch, bce, learning_rate)

struct GoalTrainReport {
  double initial_bce{0.0};
  std::vector<CurvePoint> curve;
  std::vector<std::string> excluded;  // items whose goal fell outside the grid
  std::string encoder_hash_before;
  std::string encoder_hash_after;
  std::size_t items{0};

  double final_bce() const { return curve.empty() ? initial_bce : curve.back().bce; }

  nlohmann::json to_json(const GoalTrainConfig& cfg) const {
    return {{"optimizer", "adam"},
            {"schedule", "cosine"},
            {"config", cfg},
            {"initial_bce", initial_bce},
            {"curve", curve},
            {"excluded", excluded.size()},
            {"items", items}};
  }
};

/// One training example: a pedestrian within a window.
struct GoalItem {
  std::string id;  // "scene:anchor#pedestrian"
  GoalInputs inputs;
  Grid target;
};

inline std::vector<GoalItem> make_goal_items(const GoalPredictor& model, const dataset::Dataset& data,
                                             const std::vector<dataset::ObservationWindow>& windows,
                                             std::vector<std::string>* excluded = nullptr) {
  std::vector<GoalItem> items;
  for (const auto& w : windows) {
    const auto& scene = data.scene(w.scene_id);
    const auto frames = model.frames_for(scene);
    for (int i = 0; i < w.size(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const std::string id = w.id() + "#" + std::to_string(w.pedestrian_ids[ui]);
      auto target = make_goal_target(w.future[ui].back(), frames, scene.homography, model.config().sigma_goal);
      if (!target.in_bounds) {
        log::warn("goal outside grid, excluded from goal loss: ", id);
        if (excluded) excluded->push_back(id);
        continue;
      }
      items.push_back({id, model.prepare(scene, w.past[ui]), std::move(target.grid)});
    }
  }
  return items;
}

/// Mean per-cell BCE of the model over `items` without recording gradients.
inline double mean_goal_bce(const GoalPredictor& model, const std::vector<GoalItem>& items) {
  if (items.empty()) return 0.0;
  nn::NoGradGuard guard;
  double total = 0.0;
  for (const auto& it : items) {
    const auto logits = model.forward(model.encode(it.inputs), model.semantic_input(it.inputs));
    total += nn::bce_with_logits(logits, it.target.data(), static_cast<double>(it.target.size()))->value[0];
  }
  return total / static_cast<double>(items.size());
}

/// BCE training of the goal module. Frozen encoder features are computed once per item;
/// augmented views are encoded as they are drawn.
inline GoalTrainReport train_goal_module(GoalPredictor& model, std::vector<GoalItem> items, const GoalTrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::configuration, "invalid goal training configuration");
  }
  if (items.empty()) throw Error(ErrorCode::empty_dataset, "no goal training items");
  Rng rng(cfg.seed);
  if (cfg.max_items > 0 && items.size() > static_cast<std::size_t>(cfg.max_items)) {
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(static_cast<std::size_t>(cfg.max_items));
  }

  GoalTrainReport report;
  report.items = items.size();
  report.encoder_hash_before = model.encoder().weights_hash();
  const bool frozen = model.encoder().config().frozen;

  std::vector<FeaturePyramid> cached;
  std::vector<nn::Var> sem;
  {
    nn::NoGradGuard guard;
    for (const auto& it : items) {
      if (frozen) cached.push_back(model.encode(it.inputs));
      sem.push_back(model.semantic_input(it.inputs));
    }
  }

  const bool square = std::all_of(items.begin(), items.end(), [](const GoalItem& it) {
    return it.inputs.vis.raster.height() == it.inputs.vis.raster.width() &&
           it.inputs.sem.tensor.height() == it.inputs.sem.tensor.width();
  });
  const int symmetries = square ? 8 : 4;
  std::vector<int> view(items.size(), 0);

  auto item_loss = [&](std::size_t k) {
    const Dihedral d{view[k]};
    if (d.k == 0) {
      const FeaturePyramid f = frozen ? cached[k] : model.encode(items[k].inputs);
      const auto logits = model.forward(f, sem[k]);
      return nn::bce_with_logits(logits, items[k].target.data(), static_cast<double>(items[k].target.size()));
    }
    GoalInputs in;
    in.vis.raster = apply(d, items[k].inputs.vis.raster);
    in.sem.tensor = apply(d, items[k].inputs.sem.tensor);
    FeaturePyramid f;
    if (frozen) {
      nn::NoGradGuard guard;
      f = model.encode(in);
    } else {
      f = model.encode(in);
    }
    const auto logits = model.forward(f, model.semantic_input(in));
    const Grid target = apply(d, items[k].target);
    return nn::bce_with_logits(logits, target.data(), static_cast<double>(target.size()));
  };

  {
    nn::NoGradGuard guard;
    double total = 0.0;
    for (std::size_t k = 0; k < items.size(); ++k) total += item_loss(k)->value[0];
    report.initial_bce = total / static_cast<double>(items.size());
  }

  nn::ParameterStore& params = model.unet().parameters();
  nn::Adam adam(params, {0.9, 0.999, 1e-8, cfg.weight_decay, cfg.clip_norm});
  std::unique_ptr<nn::Adam> enc_adam;
  if (!frozen) enc_adam = std::make_unique<nn::Adam>(model.encoder().parameters(), nn::AdamConfig{0.9, 0.999, 1e-8, cfg.weight_decay, cfg.clip_norm});

  const auto n = items.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
  const long total_steps = steps_per_epoch * cfg.epochs;
  long step = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    if (cfg.augment) {
      for (auto& v : view) v = uniform_int(rng, 0, symmetries - 1);
    }
    double epoch_total = 0.0;
    double lr = cfg.learning_rate;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      lr = nn::cosine_lr(cfg.learning_rate, step, total_steps, cfg.warmup_steps, cfg.lr_floor_ratio);
      params.zero_grad();
      if (enc_adam) model.encoder().parameters().zero_grad();
      double batch_total = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        auto loss = item_loss(order[b]);
        const double value = loss->value[0];
        if (!std::isfinite(value)) {
          nn::clear_tape();
          std::ostringstream msg;
          msg << "non-finite goal loss at epoch " << epoch << ", step " << step << ", lr " << lr << "; batch:";
          for (std::size_t q = start; q < end; ++q) msg << ' ' << items[order[q]].id;
          throw Error(ErrorCode::non_finite_loss, msg.str());
        }
        batch_total += value;
        nn::backward(nn::scale(loss, 1.0 / static_cast<double>(end - start)));
      }
      adam.step(lr);
      if (enc_adam) enc_adam->step(lr);
      epoch_total += batch_total;
      ++step;
    }
    report.curve.push_back({epoch, epoch_total / static_cast<double>(n), lr});
    log::debug("goal epoch ", epoch, " bce ", report.curve.back().bce);
  }
  report.encoder_hash_after = model.encoder().weights_hash();
  return report;
}

inline void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "epoch,bce,learning_rate\n";
  out.precision(10);
  for (const auto& p : curve) out << p.epoch << ',' << p.bce << ',' << p.learning_rate << '\n';
}

}  // namespace guidecot::goal
