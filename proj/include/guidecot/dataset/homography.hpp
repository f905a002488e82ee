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

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"

namespace guidecot::dataset {

/// Projective transform mapping world meters to image pixels.
class Homography {
 public:
  Homography() : Homography(Eigen::Matrix3d::Identity()) {}

  explicit Homography(const Eigen::Matrix3d& world_to_pixel) : forward_(world_to_pixel) {
    const double det = forward_.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12 || !forward_.allFinite()) {
      throw Error(ErrorCode::configuration, "homography is not invertible");
    }
    inverse_ = forward_.inverse();
  }

  static Homography scale(double px_per_m) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = px_per_m;
    m(1, 1) = px_per_m;
    return Homography(m);
  }

  const Eigen::Matrix3d& matrix() const noexcept { return forward_; }
  const Eigen::Matrix3d& inverse_matrix() const noexcept { return inverse_; }

  Vec2 world_to_pixel(Vec2 p) const { return apply(forward_, p); }
  Vec2 pixel_to_world(Vec2 p) const { return apply(inverse_, p); }

  std::array<double, 9> to_array() const {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = forward_(r, c);
    return out;
  }
  static Homography from_array(const std::array<double, 9>& a) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = a[static_cast<std::size_t>(r * 3 + c)];
    return Homography(m);
  }

  /// Reads nine whitespace-separated values, row-major.
  static Homography load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open homography '" + path + "'");
    std::array<double, 9> a{};
    for (auto& v : a) {
      if (!(in >> v)) throw Error(ErrorCode::parse, "homography '" + path + "' must hold 9 numbers");
    }
    return from_array(a);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write homography '" + path + "'");
    out.precision(17);
    for (int r = 0; r < 3; ++r) out << forward_(r, 0) << ' ' << forward_(r, 1) << ' ' << forward_(r, 2) << '\n';
  }

 private:
  static Vec2 apply(const Eigen::Matrix3d& m, Vec2 p) {
    if (!p.finite()) throw Error(ErrorCode::degenerate_point, "non-finite point");
    const Eigen::Vector3d h = m * Eigen::Vector3d(p.x, p.y, 1.0);
    if (std::abs(h.z()) < 1e-12) throw Error(ErrorCode::degenerate_point, "point maps to infinity");
    return {h.x() / h.z(), h.y() / h.z()};
  }

  Eigen::Matrix3d forward_;
  Eigen::Matrix3d inverse_;
};

}  // namespace guidecot::dataset
