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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "guidecot/nn/autograd.hpp"

namespace guidecot::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw Error(ErrorCode::dimension, std::string(op) + ": " + what);
}

inline void require_matrix(const Var& a, const char* op) {
  require(a->rank() == 2, op, "expected a matrix, got " + shape_string(a->shape));
}

inline ConstMatMap mat(const Node& n) { return ConstMatMap(n.value.data(), n.shape[0], n.shape[1]); }
inline MatMap grad_mat(Node& n) { return MatMap(n.grad_data(), n.shape[0], n.shape[1]); }

template <typename F, typename G>
Var unary(const Var& a, F forward, G derivative) {
  std::vector<double> v(a->numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = forward(a->value[i]);
  auto out = make_output(std::move(v), a->shape, {&a});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, o, derivative]() {
      double* g = a->grad_data();
      for (std::size_t i = 0; i < o->grad.size(); ++i) g[i] += o->grad[i] * derivative(a->value[i], o->value[i]);
    };
  }
  return out;
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  detail::require(a->numel() == b->numel(), "add", shape_string(a->shape) + " vs " + shape_string(b->shape));
  std::vector<double> v(a->numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] + b->value[i];
  auto out = detail::make_output(std::move(v), a->shape, {&a, &b});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, b, o]() {
      for (const Var* p : {&a, &b}) {
        if (!(*p)->requires_grad) continue;
        double* g = (*p)->grad_data();
        for (std::size_t i = 0; i < o->grad.size(); ++i) g[i] += o->grad[i];
      }
    };
  }
  return out;
}

inline Var mul(const Var& a, const Var& b) {
  detail::require(a->numel() == b->numel(), "mul", shape_string(a->shape) + " vs " + shape_string(b->shape));
  std::vector<double> v(a->numel());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] * b->value[i];
  auto out = detail::make_output(std::move(v), a->shape, {&a, &b});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, b, o]() {
      if (a->requires_grad) {
        double* g = a->grad_data();
        for (std::size_t i = 0; i < o->grad.size(); ++i) g[i] += o->grad[i] * b->value[i];
      }
      if (b->requires_grad) {
        double* g = b->grad_data();
        for (std::size_t i = 0; i < o->grad.size(); ++i) g[i] += o->grad[i] * a->value[i];
      }
    };
  }
  return out;
}

inline Var scale(const Var& a, double s) {
  return detail::unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Var relu(const Var& a) {
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

/// x * sigmoid(x); smooth, so finite-difference checks do not hit kinks.
inline Var silu(const Var& a) {
  return detail::unary(
      a, [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      });
}

/// tanh approximation of GELU.
inline Var gelu(const Var& a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  return detail::unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x))); },
      [](double x, double) {
        const double u = k * (x + 0.044715 * x * x * x);
        const double t = std::tanh(u);
        const double du = k * (1.0 + 3.0 * 0.044715 * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

inline Var sigmoid(const Var& a) {
  return detail::unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                       [](double, double y) { return y * (1.0 - y); });
}

inline Var reshape(const Var& a, std::vector<int> shape) {
  detail::require(shape_numel(shape) == a->numel(), "reshape", shape_string(a->shape) + " -> " + shape_string(shape));
  auto out = detail::make_output(a->value, std::move(shape), {&a});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, o]() {
      double* g = a->grad_data();
      for (std::size_t i = 0; i < o->grad.size(); ++i) g[i] += o->grad[i];
    };
  }
  return out;
}

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a->value) s += x;
  auto out = detail::make_output({s}, {1}, {&a});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, o]() {
      double* g = a->grad_data();
      for (std::size_t i = 0; i < a->numel(); ++i) g[i] += o->grad[0];
    };
  }
  return out;
}

/// a[m,k] * b[k,n]
inline Var matmul(const Var& a, const Var& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  detail::require(a->dim(1) == b->dim(0), "matmul", shape_string(a->shape) + " x " + shape_string(b->shape));
  const int m = a->dim(0);
  const int n = b->dim(1);
  std::vector<double> v(static_cast<std::size_t>(m) * n);
  MatMap(v.data(), m, n).noalias() = detail::mat(*a) * detail::mat(*b);
  auto out = detail::make_output(std::move(v), {m, n}, {&a, &b});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [a, b, o]() {
      const ConstMatMap go(o->grad.data(), o->shape[0], o->shape[1]);
      if (a->requires_grad) detail::grad_mat(*a).noalias() += go * detail::mat(*b).transpose();
      if (b->requires_grad) detail::grad_mat(*b).noalias() += detail::mat(*a).transpose() * go;
    };
  }
  return out;
}

/// x[m,in] * w[in,out] + bias[out]
inline Var linear(const Var& x, const Var& w, const Var& bias) {
  detail::require_matrix(x, "linear");
  detail::require_matrix(w, "linear");
  detail::require(x->dim(1) == w->dim(0), "linear", shape_string(x->shape) + " x " + shape_string(w->shape));
  detail::require(bias->numel() == static_cast<std::size_t>(w->dim(1)), "linear", "bias size");
  const int m = x->dim(0);
  const int n = w->dim(1);
  std::vector<double> v(static_cast<std::size_t>(m) * n);
  MatMap y(v.data(), m, n);
  y.noalias() = detail::mat(*x) * detail::mat(*w);
  y.rowwise() += ConstVecMap(bias->value.data(), n).transpose();
  auto out = detail::make_output(std::move(v), {m, n}, {&x, &w, &bias});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [x, w, bias, o]() {
      const ConstMatMap go(o->grad.data(), o->shape[0], o->shape[1]);
      if (x->requires_grad) detail::grad_mat(*x).noalias() += go * detail::mat(*w).transpose();
      if (w->requires_grad) detail::grad_mat(*w).noalias() += detail::mat(*x).transpose() * go;
      if (bias->requires_grad) VecMap(bias->grad_data(), o->shape[1]) += go.colwise().sum().transpose();
    };
  }
  return out;
}

/// Row-wise layer normalization of x[m,n] with affine gamma/beta[n].
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
  detail::require_matrix(x, "layer_norm");
  const int m = x->dim(0);
  const int n = x->dim(1);
  detail::require(gamma->numel() == static_cast<std::size_t>(n) && beta->numel() == static_cast<std::size_t>(n),
                  "layer_norm", "affine size");
  std::vector<double> v(x->numel());
  auto xhat = std::make_shared<std::vector<double>>(x->numel());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    const double* row = x->value.data() + static_cast<std::size_t>(r) * n;
    double mean = 0.0;
    for (int c = 0; c < n; ++c) mean += row[c];
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(r)] = is;
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      (*xhat)[i] = (row[c] - mean) * is;
      v[i] = (*xhat)[i] * gamma->value[static_cast<std::size_t>(c)] + beta->value[static_cast<std::size_t>(c)];
    }
  }
  auto out = detail::make_output(std::move(v), x->shape, {&x, &gamma, &beta});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [x, gamma, beta, o, xhat, inv_std, m, n]() {
      if (gamma->requires_grad || beta->requires_grad) {
        double* gg = gamma->grad_data();
        double* gb = beta->grad_data();
        for (int r = 0; r < m; ++r) {
          for (int c = 0; c < n; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * n + c;
            gg[c] += o->grad[i] * (*xhat)[i];
            gb[c] += o->grad[i];
          }
        }
      }
      if (x->requires_grad) {
        double* gx = x->grad_data();
        std::vector<double> dxhat(static_cast<std::size_t>(n));
        for (int r = 0; r < m; ++r) {
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (int c = 0; c < n; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * n + c;
            dxhat[static_cast<std::size_t>(c)] = o->grad[i] * gamma->value[static_cast<std::size_t>(c)];
            mean_d += dxhat[static_cast<std::size_t>(c)];
            mean_dx += dxhat[static_cast<std::size_t>(c)] * (*xhat)[i];
          }
          mean_d /= n;
          mean_dx /= n;
          const double is = (*inv_std)[static_cast<std::size_t>(r)];
          for (int c = 0; c < n; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * n + c;
            gx[i] += is * (dxhat[static_cast<std::size_t>(c)] - mean_d - (*xhat)[i] * mean_dx);
          }
        }
      }
    };
  }
  return out;
}

/// Rows of table[V,d] selected by ids -> [L,d].
inline Var embedding(const Var& table, const std::vector<int>& ids) {
  detail::require_matrix(table, "embedding");
  const int vocab = table->dim(0);
  const int d = table->dim(1);
  std::vector<double> v(ids.size() * static_cast<std::size_t>(d));
  for (std::size_t t = 0; t < ids.size(); ++t) {
    detail::require(ids[t] >= 0 && ids[t] < vocab, "embedding", "id out of range");
    std::copy_n(table->value.data() + static_cast<std::size_t>(ids[t]) * d, d, v.data() + t * d);
  }
  auto out = detail::make_output(std::move(v), {static_cast<int>(ids.size()), d}, {&table});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [table, ids, o, d]() {
      double* g = table->grad_data();
      for (std::size_t t = 0; t < ids.size(); ++t) {
        for (int c = 0; c < d; ++c) g[static_cast<std::size_t>(ids[t]) * d + c] += o->grad[t * d + c];
      }
    };
  }
  return out;
}

/// Scaled dot-product attention over `heads` column blocks of q[Lq,d], k[Lk,d], v[Lk,d] holding several
/// sequences stacked row-wise: query segment b (q_lens[b] rows) attends only to key segment b (k_lens[b] rows).
/// With `causal`, query i of a segment attends to keys 0..i of that segment (requires equal segment lengths).
inline Var packed_attention(const Var& q, const Var& k, const Var& v, int heads, bool causal, const std::vector<int>& q_lens,
                            const std::vector<int>& k_lens) {
  detail::require_matrix(q, "attention");
  detail::require_matrix(k, "attention");
  detail::require_matrix(v, "attention");
  const int lq = q->dim(0);
  const int lk = k->dim(0);
  const int d = q->dim(1);
  detail::require(k->dim(1) == d && v->dim(1) == d && v->dim(0) == lk, "attention", "q/k/v shapes");
  detail::require(heads > 0 && d % heads == 0, "attention", "model width not divisible by heads");
  detail::require(q_lens.size() == k_lens.size() && !q_lens.empty(), "attention", "segment lists differ");
  detail::require(std::accumulate(q_lens.begin(), q_lens.end(), 0) == lq &&
                      std::accumulate(k_lens.begin(), k_lens.end(), 0) == lk,
                  "attention", "segment lengths do not cover the inputs");
  if (causal) detail::require(q_lens == k_lens, "attention", "causal attention needs equal lengths");
  const int dh = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t segments = q_lens.size();

  std::vector<double> out_v(static_cast<std::size_t>(lq) * d);
  auto probs = std::make_shared<std::vector<RowMatrix>>(segments * static_cast<std::size_t>(heads));
  const ConstMatMap Q = detail::mat(*q);
  const ConstMatMap K = detail::mat(*k);
  const ConstMatMap V = detail::mat(*v);
  MatMap O(out_v.data(), lq, d);
  for (std::size_t b = 0, q0 = 0, k0 = 0; b < segments; q0 += static_cast<std::size_t>(q_lens[b]), k0 += static_cast<std::size_t>(k_lens[b]), ++b) {
    const int nq = q_lens[b];
    const int nk = k_lens[b];
    for (int h = 0; h < heads; ++h) {
      RowMatrix s = (Q.block(static_cast<Eigen::Index>(q0), h * dh, nq, dh) *
                     K.block(static_cast<Eigen::Index>(k0), h * dh, nk, dh).transpose()) *
                    scale_factor;
      for (int i = 0; i < nq; ++i) {
        const int limit = causal ? i + 1 : nk;
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < limit; ++j) mx = std::max(mx, s(i, j));
        double total = 0.0;
        for (int j = 0; j < nk; ++j) {
          s(i, j) = j < limit ? std::exp(s(i, j) - mx) : 0.0;
          total += s(i, j);
        }
        s.row(i) /= total;
      }
      O.block(static_cast<Eigen::Index>(q0), h * dh, nq, dh).noalias() = s * V.block(static_cast<Eigen::Index>(k0), h * dh, nk, dh);
      (*probs)[b * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)] = std::move(s);
    }
  }
  auto out = detail::make_output(std::move(out_v), {lq, d}, {&q, &k, &v});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [q, k, v, o, probs, heads, dh, scale_factor, lq, d, q_lens, k_lens]() {
      const ConstMatMap gO(o->grad.data(), lq, d);
      const ConstMatMap Qm = detail::mat(*q);
      const ConstMatMap Km = detail::mat(*k);
      const ConstMatMap Vm = detail::mat(*v);
      for (std::size_t b = 0, q0 = 0, k0 = 0; b < q_lens.size(); q0 += static_cast<std::size_t>(q_lens[b]), k0 += static_cast<std::size_t>(k_lens[b]), ++b) {
        const auto qi = static_cast<Eigen::Index>(q0);
        const auto ki = static_cast<Eigen::Index>(k0);
        const int nq = q_lens[b];
        const int nk = k_lens[b];
        for (int h = 0; h < heads; ++h) {
          const RowMatrix& P = (*probs)[b * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)];
          const auto gOh = gO.block(qi, h * dh, nq, dh);
          if (v->requires_grad) detail::grad_mat(*v).block(ki, h * dh, nk, dh).noalias() += P.transpose() * gOh;
          if (!q->requires_grad && !k->requires_grad) continue;
          RowMatrix dP = gOh * Vm.block(ki, h * dh, nk, dh).transpose();
          const Eigen::VectorXd row_dot = (dP.array() * P.array()).rowwise().sum();
          RowMatrix dS = P.array() * (dP.colwise() - row_dot).array();
          dS *= scale_factor;
          if (q->requires_grad) detail::grad_mat(*q).block(qi, h * dh, nq, dh).noalias() += dS * Km.block(ki, h * dh, nk, dh);
          if (k->requires_grad) detail::grad_mat(*k).block(ki, h * dh, nk, dh).noalias() += dS.transpose() * Qm.block(qi, h * dh, nq, dh);
        }
      }
    };
  }
  return out;
}

/// Single-sequence attention.
inline Var multi_head_attention(const Var& q, const Var& k, const Var& v, int heads, bool causal) {
  return packed_attention(q, k, v, heads, causal, {q->dim(0)}, {k->dim(0)});
}

/// Concatenates along the leading dimension (rows of matrices, channels of C x H x W maps).
inline Var concat0(const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat", "no inputs");
  std::vector<int> shape = parts.front()->shape;
  int lead = 0;
  for (const auto& p : parts) {
    detail::require(p->rank() == static_cast<int>(shape.size()), "concat", "rank mismatch");
    for (std::size_t i = 1; i < shape.size(); ++i) {
      detail::require(p->shape[i] == shape[i], "concat", shape_string(p->shape) + " vs " + shape_string(shape));
    }
    lead += p->shape[0];
  }
  shape[0] = lead;
  std::vector<double> v;
  v.reserve(shape_numel(shape));
  for (const auto& p : parts) v.insert(v.end(), p->value.begin(), p->value.end());
  auto out = detail::make_output(std::move(v), shape, parts);
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [parts, o]() {
      std::size_t offset = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) {
          double* g = p->grad_data();
          for (std::size_t i = 0; i < p->numel(); ++i) g[i] += o->grad[offset + i];
        }
        offset += p->numel();
      }
    };
  }
  return out;
}

/// Mean binary cross-entropy with logits: sum(softplus(z) - t z) / normalizer.
inline Var bce_with_logits(const Var& logits, const std::vector<double>& targets, double normalizer) {
  detail::require(targets.size() == logits->numel(), "bce", "target size");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double z = logits->value[i];
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - targets[i] * z;
  }
  auto out = detail::make_output({total / normalizer}, {1}, {&logits});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [logits, targets, normalizer, o]() {
      double* g = logits->grad_data();
      const double scale_g = o->grad[0] / normalizer;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-logits->value[i]));
        g[i] += scale_g * (s - targets[i]);
      }
    };
  }
  return out;
}

/// Sum over rows with target >= 0 of -log softmax(row)[target], divided by normalizer.
inline Var cross_entropy(const Var& logits, const std::vector<int>& targets, double normalizer) {
  detail::require_matrix(logits, "cross_entropy");
  const int rows = logits->dim(0);
  const int cols = logits->dim(1);
  detail::require(targets.size() == static_cast<std::size_t>(rows), "cross_entropy", "target count");
  auto probs = std::make_shared<std::vector<double>>(logits->numel());
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const double* z = logits->value.data() + static_cast<std::size_t>(r) * cols;
    double* p = probs->data() + static_cast<std::size_t>(r) * cols;
    const double mx = *std::max_element(z, z + cols);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += (p[c] = std::exp(z[c] - mx));
    for (int c = 0; c < cols; ++c) p[c] /= s;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t >= 0) {
      detail::require(t < cols, "cross_entropy", "target out of range");
      total += -(z[t] - mx - std::log(s));
    }
  }
  auto out = detail::make_output({total / normalizer}, {1}, {&logits});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [logits, targets, normalizer, probs, o, rows, cols]() {
      double* g = logits->grad_data();
      const double scale_g = o->grad[0] / normalizer;
      for (int r = 0; r < rows; ++r) {
        const int t = targets[static_cast<std::size_t>(r)];
        if (t < 0) continue;
        for (int c = 0; c < cols; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * cols + c;
          g[i] += scale_g * ((*probs)[i] - (c == t ? 1.0 : 0.0));
        }
      }
    };
  }
  return out;
}

}  // namespace guidecot::nn
