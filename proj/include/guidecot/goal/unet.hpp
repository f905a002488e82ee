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
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/goal/encoder.hpp"
#include "guidecot/nn/module.hpp"

namespace guidecot::goal {

/// Which condition branches feed the decoder skips.
enum class ConditionMode { both, sem_only, vis_only };

NLOHMANN_JSON_SERIALIZE_ENUM(ConditionMode, {{ConditionMode::both, "both"},
                                             {ConditionMode::sem_only, "sem_only"},
                                             {ConditionMode::vis_only, "vis_only"}})

struct UNetConfig {
  std::vector<int> channels{8, 16, 32};  // semantic encoder / decoder width per level
  std::vector<int> injection_levels{0, 1, 2};
  ConditionMode mode{ConditionMode::both};
  std::uint64_t seed{7};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(UNetConfig, channels, injection_levels, mode, seed)

/// U-Net over the semantic condition; visual features are concatenated into the skip connections at
/// the injection levels. Emits one logit per goal-grid cell.
class GoalUNet {
 public:
  GoalUNet(const UNetConfig& cfg, int semantic_channels, const std::vector<int>& visual_channels)
      : cfg_(cfg), visual_channels_(visual_channels) {
    const int levels = static_cast<int>(cfg.channels.size());
    if (levels < 1) throw Error(ErrorCode::architecture, "U-Net needs at least one level");
    const bool use_sem = cfg.mode != ConditionMode::vis_only;
    const bool use_vis = cfg.mode != ConditionMode::sem_only;
    for (int l : cfg.injection_levels) {
      if (l < 0 || l >= levels) throw Error(ErrorCode::architecture, "injection level " + std::to_string(l) + " outside U-Net");
      if (use_vis && (static_cast<std::size_t>(l) >= visual_channels.size() || visual_channels[static_cast<std::size_t>(l)] == 0)) {
        throw Error(ErrorCode::architecture, "injection level " + std::to_string(l) + " has no visual features");
      }
    }
    if (!use_sem) {
      for (int l = 0; l < levels; ++l) {
        if (!injected(l)) throw Error(ErrorCode::architecture, "vis_only mode needs visual features at every level");
      }
    }

    Rng rng(cfg.seed);
    int in = semantic_channels;
    skip_width_.assign(static_cast<std::size_t>(levels), 0);
    for (int l = 0; l < levels; ++l) {
      const int c = cfg.channels[static_cast<std::size_t>(l)];
      const std::string p = "unet.enc" + std::to_string(l);
      if (use_sem) {
        enc_a_.emplace_back(store_, p + ".a", in, c, 3, 1, 1, rng);
        enc_b_.emplace_back(store_, p + ".b", c, c, 3, 1, 1, rng);
        skip_width_[static_cast<std::size_t>(l)] += c;
      }
      if (use_vis && injected(l)) skip_width_[static_cast<std::size_t>(l)] += visual_channels[static_cast<std::size_t>(l)];
      in = c;
    }
    for (int l = levels - 1; l >= 0; --l) {
      const int c = cfg.channels[static_cast<std::size_t>(l)];
      const int below = l + 1 < levels ? cfg.channels[static_cast<std::size_t>(l + 1)] : 0;
      dec_.insert(dec_.begin(), nn::Conv2d(store_, "unet.dec" + std::to_string(l), skip_width_[static_cast<std::size_t>(l)] + below,
                                            c, 3, 1, 1, rng));
    }
    head_ = nn::Conv2d(store_, "unet.head", cfg.channels[0], 1, 1, 1, 0, rng);
  }

  const UNetConfig& config() const noexcept { return cfg_; }
  nn::ParameterStore& parameters() noexcept { return store_; }
  const nn::ParameterStore& parameters() const noexcept { return store_; }

  /// Logits [1, G_h, G_w] from the visual pyramid and the semantic condition [1 + C, G_h, G_w].
  nn::Var forward(const FeaturePyramid& vis, const nn::Var& sem) const {
    const int levels = static_cast<int>(cfg_.channels.size());
    const bool use_sem = cfg_.mode != ConditionMode::vis_only;
    const bool use_vis = cfg_.mode != ConditionMode::sem_only;
    if (sem->rank() != 3) throw Error(ErrorCode::dimension, "semantic condition must be C x H x W");
    const int gh = sem->dim(1);
    const int gw = sem->dim(2);
    if ((gh >> (levels - 1)) << (levels - 1) != gh || (gw >> (levels - 1)) << (levels - 1) != gw) {
      throw Error(ErrorCode::architecture, "goal grid must be divisible by 2^(levels-1)");
    }

    std::vector<nn::Var> skips(static_cast<std::size_t>(levels));
    nn::Var x = sem;
    for (int l = 0; l < levels; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      std::vector<nn::Var> parts;
      if (use_sem) {
        if (l > 0) x = nn::avg_pool2(x);
        x = nn::silu(enc_a_[ul](x));
        x = nn::silu(enc_b_[ul](x));
        parts.push_back(x);
      }
      if (use_vis && injected(l)) {
        if (!vis.has(ul)) throw Error(ErrorCode::architecture, "visual pyramid lacks level " + std::to_string(l));
        const nn::Var& v = vis.levels[ul];
        if (v->dim(1) != (gh >> l) || v->dim(2) != (gw >> l)) {
          throw Error(ErrorCode::architecture, "visual level " + std::to_string(l) + " has shape " + nn::shape_string(v->shape) +
                                                   ", expected spatial " + std::to_string(gh >> l) + "x" + std::to_string(gw >> l));
        }
        parts.push_back(v);
      }
      skips[ul] = parts.size() == 1 ? parts.front() : nn::concat0(parts);
    }

    nn::Var d;
    for (int l = levels - 1; l >= 0; --l) {
      const auto ul = static_cast<std::size_t>(l);
      nn::Var in = d ? nn::concat0({skips[ul], nn::upsample2(d)}) : skips[ul];
      d = nn::silu(dec_[ul](in));
    }
    return head_(d);
  }

 private:
  bool injected(int l) const {
    for (int k : cfg_.injection_levels)
      if (k == l) return true;
    return false;
  }

  UNetConfig cfg_;
  std::vector<int> visual_channels_;
  std::vector<int> skip_width_;
  nn::ParameterStore store_;
  std::vector<nn::Conv2d> enc_a_;
  std::vector<nn::Conv2d> enc_b_;
  std::vector<nn::Conv2d> dec_;
  nn::Conv2d head_;
};

}  // namespace guidecot::goal
