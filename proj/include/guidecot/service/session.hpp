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

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "guidecot/common/png_io.hpp"
#include "guidecot/config.hpp"
#include "guidecot/pipeline.hpp"

namespace guidecot::service {

/// Immutable models shared by in-flight requests.
struct LoadedModels {
  goal::GoalPredictor goal;
  cot::Seq2Seq llm;
  std::string goal_hash;
  std::string llm_hash;

  LoadedModels(goal::GoalPredictor g, cot::Seq2Seq l)
      : goal(std::move(g)), llm(std::move(l)), goal_hash(goal.weights_hash()), llm_hash(llm.weights_hash()) {}

  Pipeline pipeline() const { return Pipeline(goal, llm); }
};

/// Shared read access to the current models for the lifetime of one request.
class ModelLease {
 public:
  ModelLease(std::shared_lock<std::shared_mutex> lock, std::shared_ptr<const LoadedModels> models)
      : lock_(std::move(lock)), models_(std::move(models)) {}
  const LoadedModels& operator*() const noexcept { return *models_; }
  const LoadedModels* operator->() const noexcept { return models_.get(); }

 private:
  std::shared_lock<std::shared_mutex> lock_;
  std::shared_ptr<const LoadedModels> models_;
};

/// Models, scenes and per-(window, pedestrian) caches. Requests hold a shared lock; reload takes it
/// exclusively, so it waits for in-flight requests and clears the caches before new ones start.
class SessionState {
 public:
  SessionState(dataset::Dataset data, ServiceConfig cfg) : data_(std::move(data)), cfg_(std::move(cfg)) {
    for (std::size_t k = 0; k < data_.windows.size(); ++k) window_index_[data_.windows[k].id()] = k;
  }

  const ServiceConfig& config() const noexcept { return cfg_; }
  const dataset::Dataset& data() const noexcept { return data_; }

  /// Installs models; blocks until in-flight requests finish.
  void install(goal::GoalPredictor goal_model, cot::Seq2Seq llm) {
    auto models = std::make_shared<const LoadedModels>(std::move(goal_model), std::move(llm));
    std::unique_lock lock(mutex_);
    models_ = std::move(models);
    std::lock_guard cache_lock(cache_mutex_);
    logits_.clear();
    ++generation_;
  }

  /// Loads checkpoints from disk. A failed load leaves the previous models in place.
  void reload(const std::string& goal_path, const std::string& llm_path) {
    auto goal_model = goal::GoalPredictor::load(goal_path);
    auto llm = cot::Seq2Seq::load(llm_path);
    install(std::move(goal_model), std::move(llm));
  }

  void unload() {
    std::unique_lock lock(mutex_);
    models_.reset();
    std::lock_guard cache_lock(cache_mutex_);
    logits_.clear();
    ++generation_;
  }

  bool loaded() const {
    std::shared_lock lock(mutex_);
    return models_ != nullptr;
  }

  ModelLease lease() const {
    std::shared_lock lock(mutex_);
    if (!models_) throw Error(ErrorCode::unavailable, "no model is loaded");
    auto models = models_;
    return ModelLease(std::move(lock), std::move(models));
  }

  const dataset::ObservationWindow& window(const std::string& id) const {
    const auto it = window_index_.find(id);
    if (it == window_index_.end()) throw Error(ErrorCode::reference, "unknown window '" + id + "'");
    return data_.windows[it->second];
  }

  std::vector<const dataset::ObservationWindow*> windows_of(const std::string& scene_id) const {
    data_.scene(scene_id);
    std::vector<const dataset::ObservationWindow*> out;
    for (const auto& w : data_.windows)
      if (w.scene_id == scene_id) out.push_back(&w);
    return out;
  }

  /// Unguided logits for (window, pedestrian), computed once and never modified afterwards.
  std::shared_ptr<const goal::GoalLogitMap> unguided_logits(const ModelLease& models, const dataset::ObservationWindow& w,
                                                            int i) const {
    const std::string key = w.id() + "#" + std::to_string(i);
    {
      std::lock_guard lock(cache_mutex_);
      const auto it = logits_.find(key);
      if (it != logits_.end()) {
        ++cache_hits_;
        return it->second;
      }
    }
    const auto& scene = data_.scene(w.scene_id);
    auto computed = std::make_shared<const goal::GoalLogitMap>(
        models->pipeline().unguided_logits(scene, w.past[static_cast<std::size_t>(i)]));
    ++encoder_runs_;
    std::lock_guard lock(cache_mutex_);
    return logits_.try_emplace(key, std::move(computed)).first->second;
  }

  /// PNG bytes of a scene image, encoded once.
  std::shared_ptr<const std::vector<std::uint8_t>> scene_png(const std::string& scene_id) const {
    std::lock_guard lock(cache_mutex_);
    auto& slot = images_[scene_id];
    if (!slot) slot = std::make_shared<const std::vector<std::uint8_t>>(png::encode_rgb(data_.scene(scene_id).image));
    return slot;
  }

  std::size_t cached_logits() const {
    std::lock_guard lock(cache_mutex_);
    return logits_.size();
  }
  std::size_t encoder_runs() const noexcept { return encoder_runs_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  std::uint64_t model_generation() const {
    std::shared_lock lock(mutex_);
    return generation_;
  }

 private:
  dataset::Dataset data_;
  ServiceConfig cfg_;
  std::map<std::string, std::size_t> window_index_;

  mutable std::shared_mutex mutex_;
  std::shared_ptr<const LoadedModels> models_;
  std::uint64_t generation_{0};

  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const goal::GoalLogitMap>> logits_;
  mutable std::map<std::string, std::shared_ptr<const std::vector<std::uint8_t>>> images_;
  mutable std::atomic<std::size_t> encoder_runs_{0};
  mutable std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace guidecot::service
