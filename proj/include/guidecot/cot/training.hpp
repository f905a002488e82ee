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
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/log.hpp"
#include "guidecot/dataset/dataset.hpp"
#include "guidecot/cot/text.hpp"
#include "guidecot/cot/transformer.hpp"
#include "guidecot/goal/training.hpp"

namespace guidecot::cot {

struct LlmTrainConfig {
  int epochs{20};
  int batch_size{16};
  double learning_rate{1e-3};
  int warmup_steps{50};
  double lr_floor_ratio{0.05};
  double clip_norm{1.0};
  double weight_decay{0.0};
  std::uint64_t seed{0};
  int max_items{0};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LlmTrainConfig, epochs, batch_size, learning_rate, warmup_steps,
                                                lr_floor_ratio, clip_norm, weight_decay, seed, max_items)

struct LlmTrainReport {
  double initial_ce{0.0};
  std::vector<goal::CurvePoint> curve;  // `bce` holds the cross-entropy
  std::size_t items{0};

  double final_ce() const { return curve.empty() ? initial_ce : curve.back().bce; }

  nlohmann::json to_json(const LlmTrainConfig& cfg) const {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& p : curve) c.push_back({{"epoch", p.epoch}, {"ce", p.bce}, {"learning_rate", p.learning_rate}});
    return {{"optimizer", "adam"}, {"schedule", "cosine"}, {"config", cfg}, {"initial_ce", initial_ce}, {"curve", c}, {"items", items}};
  }
};

/// Text triple for one pedestrian; the goal sentence uses the ground-truth final position.
struct PromptDocument {
  std::string question;
  std::string cot;
  std::string answer;
};

inline PromptDocument make_document(const dataset::Scene& scene, const dataset::ObservationWindow& w, int i,
                                    const TextConfig& cfg) {
  const auto ui = static_cast<std::size_t>(i);
  const Vec2 goal_px = scene.homography.world_to_pixel(w.future[ui].back());
  return {serialize_observation(w, i, cfg), make_cot_sentence(i, goal_px, w.tau_pred(), cfg.cot_decimals),
          serialize_answer(w.future[ui], cfg.decimals)};
}

inline std::vector<SeqExample> make_llm_examples(const Seq2Seq& model, const dataset::Dataset& data,
                                                 const std::vector<dataset::ObservationWindow>& windows) {
  std::vector<SeqExample> out;
  const auto& text = model.config().text;
  for (const auto& w : windows) {
    const auto& scene = data.scene(w.scene_id);
    for (int i = 0; i < w.size(); ++i) {
      const auto doc = make_document(scene, w, i, text);
      out.push_back({w.id() + "#" + std::to_string(w.pedestrian_ids[static_cast<std::size_t>(i)]),
                     model.tokenizer().encode(join_prompt(doc.question, doc.cot)), model.tokenizer().encode(doc.answer)});
    }
  }
  return out;
}

/// Token-weighted mean cross-entropy over `items` without recording gradients.
inline double mean_ce(const Seq2Seq& model, const std::vector<SeqExample>& items, int batch_size = 32) {
  nn::NoGradGuard guard;
  double total = 0.0;
  double tokens = 0.0;
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const SeqExample*> batch;
    double n = 0.0;
    for (std::size_t k = start; k < std::min(items.size(), start + static_cast<std::size_t>(batch_size)); ++k) {
      batch.push_back(&items[k]);
      n += static_cast<double>(target_token_count(items[k]));
    }
    total += model.loss(batch)->value[0] * n;
    tokens += n;
  }
  return tokens > 0.0 ? total / tokens : 0.0;
}

/// Teacher-forced cross-entropy training on answer tokens.
inline LlmTrainReport train_llm(Seq2Seq& model, std::vector<SeqExample> items, const LlmTrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::configuration, "invalid sequence training configuration");
  }
  if (items.empty()) throw Error(ErrorCode::empty_dataset, "no sequence training items");
  Rng rng(cfg.seed);
  if (cfg.max_items > 0 && items.size() > static_cast<std::size_t>(cfg.max_items)) {
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(static_cast<std::size_t>(cfg.max_items));
  }
  LlmTrainReport report;
  report.items = items.size();
  report.initial_ce = mean_ce(model, items);

  nn::ParameterStore& params = model.parameters();
  nn::Adam adam(params, {0.9, 0.999, 1e-8, cfg.weight_decay, cfg.clip_norm});
  const auto n = items.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const long total_steps = static_cast<long>((n + bs - 1) / bs) * cfg.epochs;
  long step = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    double tokens = 0.0;
    double lr = cfg.learning_rate;
    for (std::size_t start = 0; start < n; start += bs) {
      std::vector<const SeqExample*> batch;
      double count = 0.0;
      for (std::size_t k = start; k < std::min(n, start + bs); ++k) {
        batch.push_back(&items[order[k]]);
        count += static_cast<double>(target_token_count(items[order[k]]));
      }
      lr = nn::cosine_lr(cfg.learning_rate, step, total_steps, cfg.warmup_steps, cfg.lr_floor_ratio);
      params.zero_grad();
      const nn::Var loss = model.loss(batch);
      if (!std::isfinite(loss->value[0])) {
        nn::clear_tape();
        std::ostringstream msg;
        msg << "non-finite sequence loss at epoch " << epoch << ", step " << step << ", lr " << lr << "; batch:";
        for (const auto* e : batch) msg << ' ' << e->id;
        throw Error(ErrorCode::non_finite_loss, msg.str());
      }
      nn::backward(loss);
      adam.step(lr);
      total += loss->value[0] * count;
      tokens += count;
      ++step;
    }
    report.curve.push_back({epoch, total / tokens, lr});
    log::debug("seq epoch ", epoch, " ce ", report.curve.back().bce);
  }
  return report;
}

}  // namespace guidecot::cot
