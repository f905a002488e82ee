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
#include <cstddef>
#include <utility>
#include <vector>

#include "guidecot/common/error.hpp"

namespace guidecot {

/// Single-channel H x W raster of doubles, row-major.
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, double fill = 0.0)
      : height_(height), width_(width), data_(checked_size(height, width), fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int row, int col) { return data_[index(row, col)]; }
  double at(int row, int col) const { return data_[index(row, col)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }
  bool same_shape(const Grid& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double max() const { return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end()); }
  double min() const { return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end()); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(int h, int w) {
    if (h < 0 || w < 0) throw Error(ErrorCode::dimension, "negative grid dimension");
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  int height_{0};
  int width_{0};
  std::vector<double> data_;
};

/// Multi-channel raster stored channel-planar (C x H x W), values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width),
        data_(checked_size(channels, height, width), fill) {}

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int channel, int row, int col) { return data_[index(channel, row, col)]; }
  double at(int channel, int row, int col) const { return data_[index(channel, row, col)]; }

  bool same_shape(const Image& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool same_spatial(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  Grid plane(int channel) const {
    Grid g(height_, width_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(channel * plane_size()), plane_size(),
                g.data().begin());
    return g;
  }
  void set_plane(int channel, const Grid& g) {
    if (g.height() != height_ || g.width() != width_) {
      throw Error(ErrorCode::dimension, "plane shape mismatch");
    }
    std::copy(g.data().begin(), g.data().end(),
              data_.begin() + static_cast<std::ptrdiff_t>(channel * plane_size()));
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(int c, int h, int w) {
    if (c < 0 || h < 0 || w < 0) throw Error(ErrorCode::dimension, "negative image dimension");
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t index(int c, int r, int col) const noexcept {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(r)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int channels_{0};
  int height_{0};
  int width_{0};
  std::vector<double> data_;
};

/// One of the 8 symmetries of the square: bit 0 mirrors columns, bit 1 mirrors rows, bit 2 transposes.
/// Non-square rasters only support k < 4.
struct Dihedral {
  int k{0};

  bool transposes() const noexcept { return (k & 4) != 0; }

  // source (row, col) for output (r, c) of an output raster sized h x w
  void source(int r, int c, int h, int w, int& sr, int& sc) const noexcept {
    if (k & 1) c = w - 1 - c;
    if (k & 2) r = h - 1 - r;
    sr = r;
    sc = c;
    if (transposes()) std::swap(sr, sc);
  }
};

inline Grid apply(const Dihedral& d, const Grid& src) {
  if (d.transposes() && src.height() != src.width()) throw Error(ErrorCode::dimension, "transpose needs a square grid");
  Grid out(src.height(), src.width());
  int sr = 0;
  int sc = 0;
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      d.source(r, c, out.height(), out.width(), sr, sc);
      out.at(r, c) = src.at(sr, sc);
    }
  }
  return out;
}

inline Image apply(const Dihedral& d, const Image& src) {
  if (d.transposes() && src.height() != src.width()) throw Error(ErrorCode::dimension, "transpose needs a square image");
  Image out(src.channels(), src.height(), src.width());
  int sr = 0;
  int sc = 0;
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      d.source(r, c, out.height(), out.width(), sr, sc);
      for (int ch = 0; ch < src.channels(); ++ch) out.at(ch, r, c) = src.at(ch, sr, sc);
    }
  }
  return out;
}

/// Bilinear resize with pixel-center alignment.
inline Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  if (height <= 0 || width <= 0 || src.empty()) throw Error(ErrorCode::dimension, "invalid resize target");
  Image out(src.channels(), height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < src.channels(); ++ch) {
        const double top = src.at(ch, y0, x0) * (1.0 - wx) + src.at(ch, y0, x1) * wx;
        const double bottom = src.at(ch, y1, x0) * (1.0 - wx) + src.at(ch, y1, x1) * wx;
        out.at(ch, r, c) = top * (1.0 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

/// Nearest-neighbour resize; keeps one-hot class rasters one-hot.
inline Image resize_nearest(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  if (height <= 0 || width <= 0 || src.empty()) throw Error(ErrorCode::dimension, "invalid resize target");
  Image out(src.channels(), height, width);
  for (int r = 0; r < height; ++r) {
    const int sr = std::min(src.height() - 1, static_cast<int>((r + 0.5) * src.height() / height));
    for (int c = 0; c < width; ++c) {
      const int sc = std::min(src.width() - 1, static_cast<int>((c + 0.5) * src.width() / width));
      for (int ch = 0; ch < src.channels(); ++ch) out.at(ch, r, c) = src.at(ch, sr, sc);
    }
  }
  return out;
}

}  // namespace guidecot
