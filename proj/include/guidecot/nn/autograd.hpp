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
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "guidecot/common/error.hpp"

namespace guidecot::nn {

/// A value in the computation graph. Leaves created with `parameter` accumulate gradients across
/// backward passes; intermediate nodes live on the thread-local tape until `backward` runs.
class Node {
 public:
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<int> shape;
  bool requires_grad{false};
  std::function<void()> backward;

  std::size_t numel() const noexcept { return value.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  int rank() const noexcept { return static_cast<int>(shape.size()); }

  double* grad_data() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad.data();
  }
  void zero_grad() { grad.assign(value.size(), 0.0); }
};

using Var = std::shared_ptr<Node>;

struct TapeState {
  std::vector<Var> nodes;
  int no_grad_depth{0};
};

inline TapeState& tape_state() {
  thread_local TapeState state;
  return state;
}

/// Disables graph recording in scope (inference).
class NoGradGuard {
 public:
  NoGradGuard() { ++tape_state().no_grad_depth; }
  ~NoGradGuard() { --tape_state().no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw Error(ErrorCode::dimension, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

inline Var constant(std::vector<double> values, std::vector<int> shape) {
  if (values.size() != shape_numel(shape)) {
    throw Error(ErrorCode::dimension, "constant: value count does not match shape " + shape_string(shape));
  }
  auto n = std::make_shared<Node>();
  n->value = std::move(values);
  n->shape = std::move(shape);
  return n;
}

inline Var zeros(std::vector<int> shape) {
  const auto n = shape_numel(shape);
  return constant(std::vector<double>(n, 0.0), std::move(shape));
}

inline Var parameter(std::vector<double> values, std::vector<int> shape) {
  auto n = constant(std::move(values), std::move(shape));
  n->requires_grad = true;
  return n;
}

namespace detail {

inline Var make_output(std::vector<double> value, std::vector<int> shape, std::initializer_list<const Var*> parents) {
  auto out = std::make_shared<Node>();
  out->value = std::move(value);
  out->shape = std::move(shape);
  auto& tape = tape_state();
  if (tape.no_grad_depth == 0) {
    for (const Var* p : parents) out->requires_grad = out->requires_grad || (*p)->requires_grad;
  }
  if (out->requires_grad) tape.nodes.push_back(out);
  return out;
}

inline Var make_output(std::vector<double> value, std::vector<int> shape, const std::vector<Var>& parents) {
  auto out = std::make_shared<Node>();
  out->value = std::move(value);
  out->shape = std::move(shape);
  auto& tape = tape_state();
  if (tape.no_grad_depth == 0) {
    for (const Var& p : parents) out->requires_grad = out->requires_grad || p->requires_grad;
  }
  if (out->requires_grad) tape.nodes.push_back(out);
  return out;
}

}  // namespace detail

/// Runs reverse-mode accumulation from a scalar and clears the tape.
inline void backward(const Var& loss) {
  if (loss->numel() != 1) throw Error(ErrorCode::dimension, "backward expects a scalar loss");
  auto& nodes = tape_state().nodes;
  if (loss->requires_grad) {
    loss->grad_data()[0] += 1.0;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      Node& n = **it;
      if (n.backward && !n.grad.empty()) n.backward();
    }
  }
  nodes.clear();
}

/// Drops any recorded graph without propagating.
inline void clear_tape() { tape_state().nodes.clear(); }

}  // namespace guidecot::nn
