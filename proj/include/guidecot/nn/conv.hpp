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

#include <memory>
#include <vector>

#include "guidecot/nn/ops.hpp"

namespace guidecot::nn {

struct ConvGeometry {
  int channels, height, width;
  int kernel, stride, pad;
  int out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
  int out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
  int patch() const { return channels * kernel * kernel; }
};

namespace detail {

/// cols[(c*k + ky)*k + kx, oy*Wo + ox] = x[c, oy*s + ky - p, ox*s + kx - p]
inline void im2col(const double* x, const ConvGeometry& g, double* cols) {
  const int ho = g.out_height();
  const int wo = g.out_width();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        double* row = cols + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            row[oy * wo + ox] = (iy >= 0 && iy < g.height && ix >= 0 && ix < g.width)
                                    ? x[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix]
                                    : 0.0;
          }
        }
      }
    }
  }
}

inline void col2im_add(const double* cols, const ConvGeometry& g, double* dx) {
  const int ho = g.out_height();
  const int wo = g.out_width();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const double* row = cols + static_cast<std::size_t>((c * g.kernel + ky) * g.kernel + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.height) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.width) continue;
            dx[(static_cast<std::size_t>(c) * g.height + iy) * g.width + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

inline void require_map(const Var& x, const char* op) {
  require(x->rank() == 3, op, "expected a C x H x W map, got " + shape_string(x->shape));
}

}  // namespace detail

/// 2-D convolution of x[C,H,W] with weight[Co, C*k*k] and bias[Co].
inline Var conv2d(const Var& x, const Var& weight, const Var& bias, int kernel, int stride, int pad) {
  detail::require_map(x, "conv2d");
  const ConvGeometry g{x->dim(0), x->dim(1), x->dim(2), kernel, stride, pad};
  detail::require(weight->rank() == 2 && weight->dim(1) == g.patch(), "conv2d",
                  "weight " + shape_string(weight->shape) + " does not match input " + shape_string(x->shape));
  const int co = weight->dim(0);
  detail::require(bias->numel() == static_cast<std::size_t>(co), "conv2d", "bias size");
  const int ho = g.out_height();
  const int wo = g.out_width();
  detail::require(ho > 0 && wo > 0, "conv2d", "empty output");

  auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(g.patch()) * ho * wo);
  detail::im2col(x->value.data(), g, cols->data());
  std::vector<double> v(static_cast<std::size_t>(co) * ho * wo);
  MatMap y(v.data(), co, ho * wo);
  y.noalias() = detail::mat(*weight) * ConstMatMap(cols->data(), g.patch(), ho * wo);
  y.colwise() += ConstVecMap(bias->value.data(), co);

  auto out = detail::make_output(std::move(v), {co, ho, wo}, {&x, &weight, &bias});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [x, weight, bias, o, cols, g, co, ho, wo]() {
      const ConstMatMap go(o->grad.data(), co, ho * wo);
      const ConstMatMap colm(cols->data(), g.patch(), ho * wo);
      if (weight->requires_grad) detail::grad_mat(*weight).noalias() += go * colm.transpose();
      if (bias->requires_grad) VecMap(bias->grad_data(), co) += go.rowwise().sum();
      if (x->requires_grad) {
        RowMatrix dcols = detail::mat(*weight).transpose() * go;
        detail::col2im_add(dcols.data(), g, x->grad_data());
      }
    };
  }
  return out;
}

/// 2x2 average pooling (even H and W).
inline Var avg_pool2(const Var& x) {
  detail::require_map(x, "avg_pool2");
  const int c = x->dim(0);
  const int h = x->dim(1);
  const int w = x->dim(2);
  detail::require(h % 2 == 0 && w % 2 == 0, "avg_pool2", "odd spatial size " + shape_string(x->shape));
  const int ho = h / 2;
  const int wo = w / 2;
  std::vector<double> v(static_cast<std::size_t>(c) * ho * wo);
  for (int ch = 0; ch < c; ++ch) {
    for (int r = 0; r < ho; ++r) {
      for (int col = 0; col < wo; ++col) {
        const double* base = x->value.data() + (static_cast<std::size_t>(ch) * h + 2 * r) * w + 2 * col;
        v[(static_cast<std::size_t>(ch) * ho + r) * wo + col] = 0.25 * (base[0] + base[1] + base[w] + base[w + 1]);
      }
    }
  }
  auto out = detail::make_output(std::move(v), {c, ho, wo}, {&x});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [x, o, c, h, w, ho, wo]() {
      double* g = x->grad_data();
      for (int ch = 0; ch < c; ++ch) {
        for (int r = 0; r < ho; ++r) {
          for (int col = 0; col < wo; ++col) {
            const double d = 0.25 * o->grad[(static_cast<std::size_t>(ch) * ho + r) * wo + col];
            double* base = g + (static_cast<std::size_t>(ch) * h + 2 * r) * w + 2 * col;
            base[0] += d;
            base[1] += d;
            base[w] += d;
            base[w + 1] += d;
          }
        }
      }
    };
  }
  return out;
}

/// Nearest-neighbour 2x upsampling.
inline Var upsample2(const Var& x) {
  detail::require_map(x, "upsample2");
  const int c = x->dim(0);
  const int h = x->dim(1);
  const int w = x->dim(2);
  std::vector<double> v(static_cast<std::size_t>(c) * 4 * h * w);
  for (int ch = 0; ch < c; ++ch) {
    for (int r = 0; r < 2 * h; ++r) {
      for (int col = 0; col < 2 * w; ++col) {
        v[(static_cast<std::size_t>(ch) * 2 * h + r) * 2 * w + col] =
            x->value[(static_cast<std::size_t>(ch) * h + r / 2) * w + col / 2];
      }
    }
  }
  auto out = detail::make_output(std::move(v), {c, 2 * h, 2 * w}, {&x});
  if (out->requires_grad) {
    Node* o = out.get();
    out->backward = [x, o, c, h, w]() {
      double* g = x->grad_data();
      for (int ch = 0; ch < c; ++ch) {
        for (int r = 0; r < 2 * h; ++r) {
          for (int col = 0; col < 2 * w; ++col) {
            g[(static_cast<std::size_t>(ch) * h + r / 2) * w + col / 2] +=
                o->grad[(static_cast<std::size_t>(ch) * 2 * h + r) * 2 * w + col];
          }
        }
      }
    };
  }
  return out;
}

}  // namespace guidecot::nn
