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
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/dataset/homography.hpp"
#include "guidecot/goal/frames.hpp"
#include "guidecot/goal/probability.hpp"

namespace guidecot::goal {

enum class SamplingStrategy { multinomial, topk_then_multinomial };

NLOHMANN_JSON_SERIALIZE_ENUM(SamplingStrategy, {{SamplingStrategy::multinomial, "multinomial"},
                                                {SamplingStrategy::topk_then_multinomial, "topk_then_multinomial"}})

struct SamplingConfig {
  int k{20};
  SamplingStrategy strategy{SamplingStrategy::multinomial};
  double temperature{1.0};
  int top_k{32};  // candidate cells kept by topk_then_multinomial
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SamplingConfig, k, strategy, temperature, top_k)

struct GoalSample {
  int row{0};
  int col{0};
  Vec2 grid;   // continuous grid coordinate of the cell center (x = col, y = row)
  Vec2 pixel;  // scene pixel
  Vec2 world;  // meters
  double score{0.0};
};

/// Sampling weights p^(1/T) over the selected cells, normalized; T == 0 puts all mass on the maxima.
inline std::vector<double> sampling_weights(const Grid& prob, const SamplingConfig& cfg) {
  if (!std::isfinite(cfg.temperature) || cfg.temperature < 0.0) {
    throw Error(ErrorCode::parameter, "sampling temperature must be finite and >= 0");
  }
  const std::size_t n = prob.size();
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = prob[i];
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::parameter, "probability map has invalid values");
    peak = std::max(peak, p);
  }
  if (peak <= 0.0) throw Error(ErrorCode::degenerate_distribution, "probability map has no positive cell");

  std::vector<char> keep(n, 1);
  if (cfg.strategy == SamplingStrategy::topk_then_multinomial) {
    if (cfg.top_k < 1) throw Error(ErrorCode::parameter, "top_k must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto m = std::min<std::size_t>(static_cast<std::size_t>(cfg.top_k), n);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prob[a] > prob[b]; });
    std::fill(keep.begin(), keep.end(), 0);
    for (std::size_t i = 0; i < m; ++i) keep[order[i]] = 1;
  }

  std::vector<double> w(n, 0.0);
  if (cfg.temperature == 0.0) {
    for (std::size_t i = 0; i < n; ++i) w[i] = (keep[i] && prob[i] == peak) ? 1.0 : 0.0;
  } else {
    const double log_peak = std::log(peak);
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i] && prob[i] > 0.0) w[i] = std::exp((std::log(prob[i]) - log_peak) / cfg.temperature);
    }
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCode::degenerate_distribution, "sampling weights vanish");
  for (double& x : w) x /= total;
  return w;
}

/// Draws cfg.k cells (with replacement) from the normalized map. Only grid and score are filled.
inline std::vector<GoalSample> sample_goals(const GoalProbabilityMap& map, const SamplingConfig& cfg, std::uint64_t seed) {
  if (cfg.k < 1) throw Error(ErrorCode::parameter, "K must be >= 1");
  const auto w = sampling_weights(map.prob, cfg);
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  Rng rng(seed);
  std::vector<GoalSample> out;
  out.reserve(static_cast<std::size_t>(cfg.k));
  const int width = map.prob.width();
  for (int s = 0; s < cfg.k; ++s) {
    const double u = uniform01(rng) * cdf.back();
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    idx = std::min(idx, w.size() - 1);
    while (w[idx] == 0.0 && idx > 0) --idx;  // u landed exactly on a boundary
    GoalSample g;
    g.row = static_cast<int>(idx) / width;
    g.col = static_cast<int>(idx) % width;
    g.grid = {static_cast<double>(g.col), static_cast<double>(g.row)};
    g.score = map.prob[idx];
    out.push_back(g);
  }
  return out;
}

/// Same as above, additionally mapping each sample to scene pixels and world meters.
inline std::vector<GoalSample> sample_goals(const GoalProbabilityMap& map, const SamplingConfig& cfg, std::uint64_t seed,
                                            const FrameMap& frames, const dataset::Homography& homography) {
  auto out = sample_goals(map, cfg, seed);
  for (auto& g : out) {
    g.pixel = frames.grid_to_scene(g.grid);
    g.world = homography.pixel_to_world(g.pixel);
  }
  return out;
}

}  // namespace guidecot::goal
