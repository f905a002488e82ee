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

#include "fixtures.hpp"
#include "guidecot/dataset/dataset.hpp"
#include "guidecot/dataset/synth.hpp"

using namespace guidecot;
using namespace guidecot::dataset;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::io;
}

}  // namespace

TEST(Annotations, ParsesAndCanonicalizes) {
  const auto rows = parse_annotations_text("10 2 1.5 2.5\n\n0\t1\t-1e-1\t3\n10.0 1 0.0 0.0\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (RawAnnotation{0, 1, {-0.1, 3.0}}));
  EXPECT_EQ(rows[1], (RawAnnotation{10, 1, {0.0, 0.0}}));
  EXPECT_EQ(rows[2], (RawAnnotation{10, 2, {1.5, 2.5}}));
  EXPECT_EQ(parse_annotations_text(format_annotations(rows)), rows);
}

TEST(Annotations, Errors) {
  EXPECT_EQ(code_of([] { parse_annotations_text("1 2 3\n"); }), ErrorCode::parse);
  EXPECT_EQ(code_of([] { parse_annotations_text("1.5 2 3 4\n"); }), ErrorCode::parse);
  EXPECT_EQ(code_of([] { parse_annotations_text("1 2 x 4\n"); }), ErrorCode::parse);
  EXPECT_EQ(code_of([] { parse_annotations_text("1 2 nan 4\n"); }), ErrorCode::parse);
  EXPECT_EQ(code_of([] { parse_annotations_text("1 2 0 0\n1 2 1 1\n"); }), ErrorCode::duplicate_annotation);
  EXPECT_EQ(code_of([] { parse_annotations_text("\n \n"); }), ErrorCode::empty_dataset);
  EXPECT_EQ(code_of([] { parse_annotations("/nonexistent/file.txt"); }), ErrorCode::io);
}

TEST(Homography, RoundTripAndErrors) {
  Eigen::Matrix3d m;
  m << 12.0, 0.5, 30.0, -0.3, 11.0, 40.0, 1e-4, 2e-4, 1.0;
  const Homography h(m);
  Rng rng(41);
  for (int n = 0; n < 200; ++n) {
    const Vec2 p{uniform(rng, -20, 20), uniform(rng, -20, 20)};
    const Vec2 back = h.pixel_to_world(h.world_to_pixel(p));
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
  }
  const Vec2 px = Homography::scale(10).world_to_pixel({1.5, -2.0});
  EXPECT_DOUBLE_EQ(px.x, 15.0);
  EXPECT_DOUBLE_EQ(px.y, -20.0);
  EXPECT_EQ(code_of([] { Homography(Eigen::Matrix3d::Zero()); }), ErrorCode::configuration);
  EXPECT_EQ(code_of([&] { h.world_to_pixel({NAN, 0}); }), ErrorCode::degenerate_point);

  fixtures::TempDir dir("hom");
  h.save(dir.file("H.txt"));
  EXPECT_EQ(Homography::load(dir.file("H.txt")).to_array(), h.to_array());
  std::ofstream(dir.file("short.txt")) << "1 0 0 0 1";
  EXPECT_EQ(code_of([&] { Homography::load(dir.file("short.txt")); }), ErrorCode::parse);
}

TEST(Windows, CompleteTracksOnly) {
  std::vector<RawAnnotation> rows;
  for (int f = 0; f < 6; ++f) rows.push_back({f, 1, {static_cast<double>(f), 0.0}});
  for (int f = 2; f < 6; ++f) rows.push_back({f, 2, {0.0, static_cast<double>(f)}});
  const auto windows = build_windows(rows, {3, 2, 1}, "s");
  ASSERT_EQ(windows.size(), 2u);  // anchors 2 and 3
  EXPECT_EQ(windows[0].id(), "s:2");
  EXPECT_EQ(windows[0].pedestrian_ids, std::vector<std::int64_t>{1});
  EXPECT_EQ(windows[1].anchor_frame, 3);
  EXPECT_EQ(windows[0].past[0], (Trajectory{{0, 0}, {1, 0}, {2, 0}}));
  EXPECT_EQ(windows[0].future[0], (Trajectory{{3, 0}, {4, 0}}));
  EXPECT_EQ(windows[0].index_of(1), 0);
  EXPECT_EQ(windows[0].index_of(2), -1);

  std::vector<RawAnnotation> strided;
  for (int f = 0; f <= 40; f += 10) strided.push_back({f, 7, {static_cast<double>(f), 0.0}});
  const auto sw = build_windows(strided, {2, 2, 10});
  ASSERT_EQ(sw.size(), 2u);
  EXPECT_EQ(sw[0].anchor_frame, 10);
  EXPECT_THROW(build_windows(rows, {1, 2, 1}), Error);
}

TEST(Windows, ConstantVelocity) {
  EXPECT_EQ(constant_velocity({{0, 0}, {1, 2}}, 3), (Trajectory{{2, 4}, {3, 6}, {4, 8}}));
  EXPECT_EQ(constant_velocity({{5, 5}}, 2), (Trajectory{{5, 5}, {5, 5}}));
  EXPECT_TRUE(constant_velocity({}, 2).empty());
}

TEST(Split, LeaveOneOutPartitionsByGroup) {
  const auto& data = fixtures::tiny_data();
  const auto split = leave_one_out_split(data, "synth0");
  EXPECT_EQ(split.train.size() + split.test.size(), data.windows.size());
  for (const auto& w : split.test) EXPECT_EQ(data.group_of(w), "synth0");
  for (const auto& w : split.train) EXPECT_NE(data.group_of(w), "synth0");
  EXPECT_FALSE(split.test.empty());
  EXPECT_EQ(code_of([&] { leave_one_out_split(data, "zara1"); }), ErrorCode::configuration);
}

TEST(Synth, DeterministicAndInsideScene) {
  LayoutSpec spec;
  spec.num_pedestrians = 6;
  const auto a = synth_scene(spec, 3, "a", "a");
  const auto b = synth_scene(spec, 3, "a", "a");
  EXPECT_EQ(a.annotations, b.annotations);
  EXPECT_EQ(a.scene.image, b.scene.image);
  EXPECT_NE(synth_scene(spec, 4, "a", "a").annotations, a.annotations);
  // position noise may push a few samples just past the image border
  for (const auto& r : a.annotations) {
    const Vec2 px = a.scene.homography.world_to_pixel(r.position);
    EXPECT_GT(px.x, -1.0);
    EXPECT_GT(px.y, -1.0);
    EXPECT_LT(px.x, a.scene.width());
    EXPECT_LT(px.y, a.scene.height());
  }
  spec.kind = LayoutKind::plaza;
  EXPECT_NO_THROW(synth_scene(spec, 3, "p", "p"));
  spec.corridor_width_m = -1.0;
  EXPECT_THROW(synth_scene(spec, 3, "p", "p"), Error);
}

namespace {

bool painted(const Scene& s, int r, int c) { return s.semantic.at(0, r, c) == 1.0 && s.image.at(0, r, c) > 0.82; }

/// Share of walkers in `s` whose last position lies on floor painted in `reference`.
double painted_exit_share(const SyntheticScene& s, const Scene& reference) {
  int hits = 0;
  for (const auto& [_, p] : s.goals) {
    const Vec2 px = reference.homography.world_to_pixel(p);
    const int r = std::clamp(static_cast<int>(std::lround(px.y)), 0, reference.height() - 1);
    const int c = std::clamp(static_cast<int>(std::lround(px.x)), 0, reference.width() - 1);
    hits += painted(reference, r, c) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(s.goals.size());
}

}  // namespace

TEST(Synth, PaintedExitIsAnImageOnlyCue) {
  LayoutSpec spec;
  spec.num_pedestrians = 60;
  int painted_cells = 0;
  spec.marked_exit_bias = 0.0;
  const auto plain = synth_scene(spec, 5, "a", "a");
  for (int r = 0; r < plain.scene.height(); ++r)
    for (int c = 0; c < plain.scene.width(); ++c) painted_cells += painted(plain.scene, r, c) ? 1 : 0;
  EXPECT_EQ(painted_cells, 0);

  spec.marked_exit_bias = 1.0;
  const auto marked = synth_scene(spec, 5, "a", "a");
  EXPECT_EQ(marked.scene.semantic, plain.scene.semantic);
  for (int r = 0; r < marked.scene.height(); ++r)
    for (int c = 0; c < marked.scene.width(); ++c) painted_cells += painted(marked.scene, r, c) ? 1 : 0;
  EXPECT_GT(painted_cells, 50);
  // Same layout and painted arm; only the exit choice differs.
  EXPECT_GT(painted_exit_share(marked, marked.scene), 0.6);
  EXPECT_LT(painted_exit_share(plain, marked.scene), 0.45);

  spec.marked_exit_bias = 1.5;
  EXPECT_THROW(synth_scene(spec, 5, "a", "a"), Error);
}

TEST(Synth, DesignedCorpusHasEnoughWindows) {
  const auto data = synth_dataset(LayoutSpec{}, 42, 5);
  EXPECT_GE(data.windows.size(), 200u);
  EXPECT_EQ(data.groups.size(), 5u);
  EXPECT_LT(out_of_bounds_rate(data), 0.01);
}

TEST(Manifest, SaveLoadRoundTrip) {
  fixtures::TempDir dir("manifest");
  const auto& data = fixtures::tiny_data();
  const auto manifest = save_dataset(data, dir.path().string());
  const auto back = load_manifest(manifest);
  EXPECT_EQ(back.groups, data.groups);
  ASSERT_EQ(back.scenes.size(), data.scenes.size());
  for (std::size_t k = 0; k < data.scenes.size(); ++k) {
    EXPECT_EQ(back.scenes[k].annotations, data.scenes[k].annotations);
    EXPECT_EQ(back.scenes[k].scene.image, data.scenes[k].scene.image);
    EXPECT_EQ(back.scenes[k].scene.semantic, data.scenes[k].scene.semantic);
    EXPECT_EQ(back.scenes[k].scene.homography.to_array(), data.scenes[k].scene.homography.to_array());
  }
  ASSERT_EQ(back.windows.size(), data.windows.size());
  for (std::size_t k = 0; k < data.windows.size(); ++k) EXPECT_EQ(back.windows[k].id(), data.windows[k].id());

  std::ofstream(dir.file("empty.json")) << R"({"scenes": []})";
  EXPECT_EQ(code_of([&] { load_manifest(dir.file("empty.json")); }), ErrorCode::empty_dataset);
  std::ofstream(dir.file("broken.json")) << "{";
  EXPECT_EQ(code_of([&] { load_manifest(dir.file("broken.json")); }), ErrorCode::parse);
}
