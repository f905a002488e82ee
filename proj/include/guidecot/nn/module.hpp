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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "guidecot/common/hash.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/nn/conv.hpp"
#include "guidecot/nn/ops.hpp"

namespace guidecot::nn {

/// Named, ordered collection of trainable tensors.
class ParameterStore {
 public:
  Var add(const std::string& name, std::vector<int> shape, std::vector<double> values) {
    for (const auto& [n, _] : items_) {
      if (n == name) throw Error(ErrorCode::architecture, "duplicate parameter '" + name + "'");
    }
    Var p = parameter(std::move(values), std::move(shape));
    items_.emplace_back(name, p);
    return p;
  }

  Var add_normal(const std::string& name, std::vector<int> shape, double stddev, Rng& rng) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = normal(rng, 0.0, stddev);
    return add(name, std::move(shape), std::move(v));
  }

  Var add_constant(const std::string& name, std::vector<int> shape, double value) {
    std::vector<double> v(shape_numel(shape), value);
    return add(name, std::move(shape), std::move(v));
  }

  const std::vector<std::pair<std::string, Var>>& items() const noexcept { return items_; }

  Var get(const std::string& name) const {
    for (const auto& [n, p] : items_)
      if (n == name) return p;
    throw Error(ErrorCode::reference, "unknown parameter '" + name + "'");
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : items_) n += p->numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, p] : items_) p->zero_grad();
  }

  void set_trainable(bool trainable) {
    for (auto& [_, p] : items_) p->requires_grad = trainable;
  }

  /// Fingerprint over names, shapes and values.
  std::string hash() const {
    Fnv1a h;
    for (const auto& [n, p] : items_) {
      h.update(n);
      h.update(p->shape.data(), p->shape.size() * sizeof(int));
      h.update(std::span<const double>(p->value));
    }
    return h.hex();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [n, p] : items_) j.push_back({{"name", n}, {"shape", p->shape}, {"values", p->value}});
    return j;
  }

  /// Loads values into an identically structured store.
  void load_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != items_.size()) {
      throw Error(ErrorCode::load, "parameter count mismatch while loading weights");
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const auto& entry = j[i];
      auto& [name, p] = items_[i];
      if (entry.at("name").get<std::string>() != name || entry.at("shape").get<std::vector<int>>() != p->shape) {
        throw Error(ErrorCode::load, "parameter '" + name + "' does not match stored weights");
      }
      auto values = entry.at("values").get<std::vector<double>>();
      if (values.size() != p->numel()) throw Error(ErrorCode::load, "parameter '" + name + "' has wrong size");
      p->value = std::move(values);
    }
  }

  void copy_values_from(const ParameterStore& other) {
    if (other.items_.size() != items_.size()) throw Error(ErrorCode::load, "parameter store mismatch");
    for (std::size_t i = 0; i < items_.size(); ++i) items_[i].second->value = other.items_[i].second->value;
  }

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

struct Linear {
  Var weight;  // [in, out]
  Var bias;    // [out]

  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng) {
    weight = store.add_normal(name + ".weight", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    bias = store.add_constant(name + ".bias", {out}, 0.0);
  }
  Var operator()(const Var& x) const { return linear(x, weight, bias); }
};

struct LayerNorm {
  Var gamma;
  Var beta;

  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, int width) {
    gamma = store.add_constant(name + ".gamma", {width}, 1.0);
    beta = store.add_constant(name + ".beta", {width}, 0.0);
  }
  Var operator()(const Var& x) const { return layer_norm(x, gamma, beta); }
};

struct Conv2d {
  Var weight;  // [out, in*k*k]
  Var bias;
  int kernel{3};
  int stride{1};
  int pad{1};

  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, int in, int out, int kernel_size, int stride_, int pad_,
         Rng& rng)
      : kernel(kernel_size), stride(stride_), pad(pad_) {
    const int fan_in = in * kernel * kernel;
    weight = store.add_normal(name + ".weight", {out, fan_in}, std::sqrt(2.0 / fan_in), rng);
    bias = store.add_constant(name + ".bias", {out}, 0.0);
  }
  int out_channels() const { return weight->dim(0); }
  Var operator()(const Var& x) const { return conv2d(x, weight, bias, kernel, stride, pad); }
};

struct AdamConfig {
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  double weight_decay{0.0};
  double clip_norm{1.0};  // <= 0 disables global-norm clipping
};

class Adam {
 public:
  Adam(ParameterStore& store, AdamConfig cfg = {}) : store_(&store), cfg_(cfg) {
    for (const auto& [_, p] : store.items()) {
      m_.emplace_back(p->numel(), 0.0);
      v_.emplace_back(p->numel(), 0.0);
    }
  }

  /// Applies one update from the accumulated gradients; returns the pre-clip gradient norm.
  double step(double lr) {
    ++t_;
    double norm2 = 0.0;
    for (const auto& [_, p] : store_->items()) {
      if (!p->requires_grad || p->grad.empty()) continue;
      for (double g : p->grad) norm2 += g * g;
    }
    const double norm = std::sqrt(norm2);
    const double clip = (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const auto& items = store_->items();
    for (std::size_t k = 0; k < items.size(); ++k) {
      Node& p = *items[k].second;
      if (!p.requires_grad || p.grad.empty()) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i] * clip;
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
        p.value[i] -= lr * (update + cfg_.weight_decay * p.value[i]);
      }
    }
    return norm;
  }

 private:
  ParameterStore* store_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_{0};
};

/// Cosine decay from `base` to `base * floor_ratio` over `total` steps after a linear warmup.
inline double cosine_lr(double base, long step, long total, long warmup = 0, double floor_ratio = 0.0) {
  if (warmup > 0 && step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return base;
  const double progress = std::clamp(static_cast<double>(step - warmup) / static_cast<double>(total - warmup), 0.0, 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
  return base * (floor_ratio + (1.0 - floor_ratio) * cosine);
}

}  // namespace guidecot::nn
