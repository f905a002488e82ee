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

#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "guidecot/common/png_io.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/render/heatmap.hpp"
#include "guidecot/render/prompt.hpp"
#include "guidecot/render/semantic_condition.hpp"
#include "oracles.hpp"

using namespace guidecot;
using render::PromptColor;
using render::PromptShape;
using render::VisualPromptStyle;

namespace {

Image random_image(Rng& rng, int h, int w) {
  Image img(3, h, w);
  for (double& v : img.data()) v = uniform01(rng);
  return img;
}

Trajectory random_track(Rng& rng, int h, int w) {
  Trajectory t;
  Vec2 p{uniform(rng, 5, w - 5.0), uniform(rng, 5, h - 5.0)};
  const Vec2 step{uniform(rng, -3, 3), uniform(rng, -3, 3) + 0.5};
  for (int i = 0; i < 8; ++i) t.push_back(p + step * i);
  return t;
}

}  // namespace

TEST(Composite, MatchesBlendOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 12; ++trial) {
    const Image scene = random_image(rng, 40, 48);
    VisualPromptStyle style;
    style.shape = trial % 2 ? PromptShape::points : PromptShape::arrow;
    style.color = static_cast<PromptColor>(trial % 3);
    const auto layer = render::draw_prompt(random_track(rng, 40, 48), style, 40, 48);
    for (double alpha : {0.0, 1.0}) {
      const auto got = render::composite(scene, layer, alpha);
      EXPECT_EQ(got.raster, oracle::composite(scene, layer, alpha)) << "alpha " << alpha;
    }
    for (double alpha : {0.25, 0.5, 0.8}) {
      const auto got = render::composite(scene, layer, alpha);
      const auto want = oracle::composite(scene, layer, alpha);
      for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got.raster.data()[i], want.data()[i], 1e-7);
    }
  }
}

TEST(Composite, AlphaZeroIsSceneAndAlphaOneReplacesUnderFullMask) {
  Rng rng(2);
  const Image scene = random_image(rng, 30, 30);
  const auto layer = render::draw_prompt({{5, 5}, {20, 20}}, VisualPromptStyle{}, 30, 30);
  EXPECT_EQ(render::composite(scene, layer, 0.0).raster, scene);
  const auto full = render::composite(scene, layer, 1.0).raster;
  int covered = 0;
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) {
      if (layer.mask.at(r, c) == 1.0) {
        ++covered;
        EXPECT_EQ(full.at(0, r, c), 1.0);
        EXPECT_EQ(full.at(1, r, c), 0.0);
      } else if (layer.mask.at(r, c) == 0.0) {
        EXPECT_EQ(full.at(1, r, c), scene.at(1, r, c));
      }
    }
  }
  EXPECT_GT(covered, 10);
}

TEST(Composite, RejectsBadAlphaAndShapes) {
  const Image scene(3, 10, 10);
  const auto layer = render::draw_prompt({{1, 1}, {8, 8}}, VisualPromptStyle{}, 10, 10);
  EXPECT_THROW(render::composite(scene, layer, 1.5), Error);
  EXPECT_THROW(render::composite(Image(3, 10, 12), layer, 0.5), Error);
}

TEST(Prompt, ArrowNeedsDistinctPoints) {
  try {
    render::draw_prompt({{3, 3}, {3, 3}}, VisualPromptStyle{}, 10, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_heading);
  }
  VisualPromptStyle points;
  points.shape = PromptShape::points;
  EXPECT_NO_THROW(render::draw_prompt({{3, 3}, {3, 3}}, points, 10, 10));
}

TEST(Prompt, ArrowheadSitsAtLastPoint) {
  const auto layer = render::draw_prompt({{5, 15}, {15, 15}, {25, 15}}, VisualPromptStyle{}, 30, 40);
  EXPECT_EQ(layer.mask.at(15, 25), 1.0);
  EXPECT_EQ(layer.mask.at(2, 2), 0.0);
  // The head is wider than the shaft.
  EXPECT_GT(layer.mask.at(17, 18), 0.0);
  EXPECT_EQ(layer.mask.at(17, 8), 0.0);
}

TEST(Prompt, ColorsFollowStyle) {
  VisualPromptStyle s;
  s.color = PromptColor::blue;
  const auto layer = render::draw_prompt({{2, 2}, {8, 8}}, s, 10, 10);
  EXPECT_EQ(layer.raster.at(2, 8, 8), 1.0);
  EXPECT_EQ(layer.raster.at(0, 8, 8), 0.0);
  EXPECT_EQ(s.name(), "blue arrow");
}

TEST(Heatmap, PeakIsOneAndCentersOnTrack) {
  const Trajectory t{{4, 4}, {6, 4}, {8, 4}};
  const Grid h = render::render_heatmap(t, 1.5, 16, 16);
  EXPECT_DOUBLE_EQ(h.max(), 1.0);
  for (double v : h.data()) EXPECT_GE(v, 0.0);
  EXPECT_GT(h.at(4, 6), h.at(10, 6));
}

TEST(Heatmap, BumpMatchesClosedForm) {
  const Grid g = render::gaussian_bump({3.5, 2.0}, 2.0, 8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      EXPECT_NEAR(g.at(r, c), std::exp(-((c - 3.5) * (c - 3.5) + (r - 2.0) * (r - 2.0)) / 8.0), 1e-15);
  EXPECT_THROW(render::gaussian_bump({0, 0}, 0.0, 4, 4), Error);
}

TEST(SemanticCondition, StacksHeatmapAndClasses) {
  Grid heat(8, 8, 0.0);
  heat.at(2, 3) = 1.0;
  Image sem(3, 16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) sem.at(c < 8 ? 0 : 1, r, c) = 1.0;
  const auto cond = render::build_semantic_condition(heat, sem);
  EXPECT_EQ(cond.tensor.channels(), 4);
  EXPECT_EQ(cond.semantic_channels(), 3);
  EXPECT_EQ(cond.heatmap(), heat);
  EXPECT_EQ(cond.tensor.at(1, 0, 0), 1.0);
  EXPECT_EQ(cond.tensor.at(2, 0, 7), 1.0);
  EXPECT_THROW(render::build_semantic_condition(heat, Image(3, 16, 8)), Error);
}

TEST(Png, EncodeAndFileRoundTrip) {
  fixtures::TempDir dir("png");
  Image img(3, 5, 7);
  Rng rng(4);
  for (double& v : img.data()) v = std::round(uniform01(rng) * 255.0) / 255.0;
  png::write_rgb(dir.file("a.png"), img);
  const Image back = png::read_rgb(dir.file("a.png"));
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-12);

  const auto bytes = png::encode_rgb(img);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes[1], 'P');
  std::ofstream(dir.file("b.png"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                            static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(png::read_rgb(dir.file("b.png")), back);
}

TEST(Dihedral, MatchesIndexOracleAndCommutesWithResize) {
  Rng rng(8);
  const Image img = random_image(rng, 6, 6);
  std::set<std::vector<double>> distinct;
  for (int k = 0; k < 8; ++k) {
    const Dihedral d{k};
    const Image out = apply(d, img);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) {
        int sr = (k & 2) ? 5 - r : r;
        int sc = (k & 1) ? 5 - c : c;
        if (k & 4) std::swap(sr, sc);
        for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(out.at(ch, r, c), img.at(ch, sr, sc));
      }
    }
    const Grid g = apply(d, img.plane(1));
    EXPECT_EQ(g, out.plane(1));
    distinct.insert(out.data());
  }
  EXPECT_EQ(distinct.size(), 8u);

  const Image big = random_image(rng, 12, 12);
  for (int k = 0; k < 8; ++k) {
    const Dihedral d{k};
    const Image lhs = resize_bilinear(apply(d, big), 6, 6);
    const Image rhs = apply(d, resize_bilinear(big, 6, 6));
    for (std::size_t i = 0; i < lhs.size(); ++i) ASSERT_NEAR(lhs.data()[i], rhs.data()[i], 1e-12);
  }

  EXPECT_EQ(apply(Dihedral{3}, apply(Dihedral{3}, img)), img);
  EXPECT_NO_THROW(apply(Dihedral{3}, random_image(rng, 4, 7)));
  EXPECT_THROW(apply(Dihedral{4}, random_image(rng, 4, 7)), Error);
  EXPECT_THROW(apply(Dihedral{5}, Grid(3, 2)), Error);
}
