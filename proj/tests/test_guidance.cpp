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

#include "guidecot/common/rng.hpp"
#include "guidecot/goal/probability.hpp"
#include "guidecot/goal/sampling.hpp"
#include "guidecot/guidance/guidance.hpp"
#include "oracles.hpp"

using namespace guidecot;
using guidance::GuidanceKind;
using guidance::GuidanceSpec;

namespace {

goal::GoalLogitMap random_logits(Rng& rng, int h, int w) {
  goal::GoalLogitMap m{Grid(h, w)};
  for (double& v : m.logits.data()) v = normal(rng, -2.0, 2.0);
  return m;
}

}  // namespace

TEST(DirectionField, MatchesOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = uniform_int(rng, 8, 40);
    const int w = uniform_int(rng, 8, 40);
    const Vec2 cur{uniform(rng, 0, w - 1.0), uniform(rng, 0, h - 1.0)};
    const double heading = uniform(rng, -kPi, kPi);
    const double theta = uniform(rng, -kPi, kPi);
    const double theta_max = uniform(rng, 0.2, 2.0);
    const Grid got = guidance::direction_field(cur, heading, theta, theta_max, h, w);
    const Grid want = oracle::direction_field(cur, heading, theta, theta_max, h, w);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(DirectionField, BoundaryValues) {
  // Heading east, commanded left (up on screen): the column above is exactly on the cone axis.
  const Grid g = guidance::direction_field({10, 10}, 0.0, guidance::kLeft, kPi / 3.0, 21, 21);
  EXPECT_EQ(g.at(3, 10), 1.0);
  EXPECT_EQ(g.at(10, 10), 0.0);  // the current cell
  EXPECT_EQ(g.at(10, 18), 0.0);  // straight ahead: |theta - theta_p| = pi/2 >= theta_max
  EXPECT_EQ(g.at(18, 10), 0.0);  // behind-right
  // Exactly theta_max off-axis: 45 degrees with theta_max = 45 degrees.
  const Grid edge = guidance::direction_field({0, 10}, 0.0, 0.0, kPi / 4.0, 21, 21);
  EXPECT_NEAR(edge.at(5, 5), 0.0, 1e-12);
  EXPECT_EQ(edge.at(10, 7), 1.0);
  for (double v : g.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GroupField, MatchesOracleWithBoundaries) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = uniform_int(rng, 8, 40);
    const int w = uniform_int(rng, 8, 40);
    // Integer goals put d_p = 0 on a cell.
    const Vec2 goal{static_cast<double>(uniform_int(rng, 0, w - 1)), static_cast<double>(uniform_int(rng, 0, h - 1))};
    const double d_max = uniform(rng, 1.0, 15.0);
    const Grid got = guidance::group_field(goal, d_max, h, w);
    const Grid want = oracle::group_field(goal, d_max, h, w);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
    EXPECT_EQ(got.at(static_cast<int>(goal.y), static_cast<int>(goal.x)), 1.0);
  }
  const Grid g = guidance::group_field({0, 0}, 5.0, 10, 10);
  EXPECT_EQ(g.at(0, 5), 0.0);  // d_p = d_max
  EXPECT_EQ(g.at(4, 4), 0.0);  // d_p > d_max
  EXPECT_THROW(guidance::group_field({0, 0}, 0.0, 4, 4), Error);
}

TEST(ExplicitGoal, BumpAndBounds) {
  const Grid g = guidance::explicit_goal_field({3, 4}, 1.0, 10, 10);
  EXPECT_EQ(g.at(4, 3), 1.0);
  EXPECT_LT(g.at(0, 0), 1e-3);
  try {
    guidance::explicit_goal_field({12, 4}, 1.0, 10, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::out_of_bounds);
  }
}

TEST(BuildField, KindsAndReferences) {
  guidance::GuidanceContext ctx{16, 16, {{2, 8}, {4, 8}, {6, 8}}, {{7, {12, 3}}}, {{7, {14, 14}}}};
  EXPECT_EQ(guidance::build_field(guidance::left(1.0), ctx).at(2, 6), 1.0);
  EXPECT_EQ(guidance::build_field(guidance::right(1.0), ctx).at(14, 6), 1.0);
  EXPECT_EQ(guidance::build_field(guidance::stop(1.0), ctx).at(8, 6), 1.0);
  EXPECT_EQ(guidance::build_field(GuidanceSpec{}, ctx).max(), 0.0);

  GuidanceSpec group;
  group.kind = GuidanceKind::group;
  group.neighbor_id = 7;
  group.d_max = 5;
  EXPECT_EQ(guidance::build_field(group, ctx).at(3, 12), 1.0);
  group.group_target = guidance::GroupTarget::ground_truth_future;
  EXPECT_EQ(guidance::build_field(group, ctx).at(14, 14), 1.0);
  group.neighbor_id = 8;
  try {
    guidance::build_field(group, ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::reference);
  }
  guidance::GuidanceContext still = ctx;
  still.past = {{4, 8}, {4, 8}};
  try {
    guidance::build_field(guidance::left(1.0), still);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_heading);
  }
}

TEST(GoalProbability, LambdaZeroIsBitIdenticalToUnguided) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = random_logits(rng, 12, 14);
    Grid field(12, 14);
    for (double& v : field.data()) v = uniform01(rng);
    EXPECT_EQ(goal::goal_probability(logits, &field, 0.0).prob, goal::goal_probability(logits).prob);
    const auto p = goal::goal_probability(logits).prob;
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], oracle::sigmoid(logits.logits[i]), 1e-15);
  }
}

TEST(GoalProbability, StrictlyIncreasingOnGuidedCells) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = random_logits(rng, 10, 10);
    Grid field(10, 10);
    for (double& v : field.data()) v = uniform01(rng) < 0.5 ? 0.0 : uniform(rng, 0.05, 1.0);
    std::vector<Grid> maps;
    for (double lambda : {0.0, 1.0, 2.0, 4.0, 8.0}) maps.push_back(goal::goal_probability(logits, &field, lambda).prob);
    for (std::size_t k = 1; k < maps.size(); ++k) {
      for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] > 0.0) EXPECT_GT(maps[k][i], maps[k - 1][i]);
        else EXPECT_EQ(maps[k][i], maps[k - 1][i]);
      }
    }
  }
}

TEST(GoalProbability, ArgmaxMovesIntoSupportForLargeLambda) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = random_logits(rng, 16, 16);
    const Grid field = guidance::direction_field({8, 8}, uniform(rng, -kPi, kPi), 0.0, kPi / 4.0, 16, 16);
    goal::SamplingConfig argmax;
    argmax.k = 1;
    argmax.temperature = 0.0;
    bool reached = false;
    for (double lambda = 0.0; lambda <= 1024.0 && !reached; lambda = lambda == 0.0 ? 0.5 : lambda * 2.0) {
      const auto s = goal::sample_goals(goal::goal_probability(logits, &field, lambda), argmax, 0).front();
      reached = field.at(s.row, s.col) > 0.0;
    }
    EXPECT_TRUE(reached);
  }
}

TEST(GoalProbability, RejectsBadLambdaAndShape) {
  const goal::GoalLogitMap logits{Grid(4, 4)};
  const Grid field(4, 5);
  EXPECT_THROW(goal::goal_probability(logits, nullptr, -1.0), Error);
  EXPECT_THROW(goal::goal_probability(logits, nullptr, std::nan("")), Error);
  EXPECT_THROW(goal::goal_probability(logits, &field, 1.0), Error);
}

TEST(GuidanceSpecJson, RoundTripsEveryKind) {
  GuidanceSpec dir = guidance::left(2.5);
  GuidanceSpec group;
  group.kind = GuidanceKind::group;
  group.neighbor_id = 3;
  group.d_max = 7;
  group.lambda = 1;
  GuidanceSpec goal_spec;
  goal_spec.kind = GuidanceKind::explicit_goal;
  goal_spec.goal_point = Vec2{4.5, 6.0};
  goal_spec.sigma = 2;
  goal_spec.lambda = 3;
  for (const auto& s : {dir, group, goal_spec, guidance::stop(4.0), GuidanceSpec{}}) {
    const nlohmann::json j = s;
    EXPECT_EQ(guidance::parse_spec(j), s) << j.dump();
    EXPECT_EQ(guidance::parse_spec(nlohmann::json::parse(j.dump())), s);
  }
}

TEST(GuidanceSpecJson, StrictValidationNamesTheField) {
  auto message = [](const std::string& text) {
    try {
      guidance::parse_spec(nlohmann::json::parse(text));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::validation);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"kind":"direction","theta":1,"lambda":1,"colour":2})").find("colour"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"direction","lambda":1})").find("theta"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"direction","theta":"left"})").find("theta"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"group","lambda":1})").find("neighbor_id"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"none","lambda":-1})").find("lambda"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"sideways"})").find("sideways"), std::string::npos);
  EXPECT_NE(message(R"({"kind":"explicit_goal","goal_point":[1]})").find("goal_point"), std::string::npos);
  EXPECT_NE(message(R"([1,2])").find("object"), std::string::npos);
}

TEST(GuidanceSpecJson, SerializedKeysConformToSchema) {
  const auto schema = guidance::spec_schema();
  const auto& props = schema.at("properties");
  Rng rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    GuidanceSpec s;
    s.kind = static_cast<GuidanceKind>(uniform_int(rng, 0, 3));
    s.theta = uniform(rng, -kPi, kPi);
    s.lambda = uniform(rng, 0, 8);
    s.neighbor_id = uniform_int(rng, 0, 50);
    if (uniform01(rng) < 0.5) s.goal_point = Vec2{uniform(rng, 0, 30), uniform(rng, 0, 30)};
    const nlohmann::json j = s;
    for (const auto& [key, value] : j.items()) {
      ASSERT_TRUE(props.contains(key)) << key;
      const auto& p = props.at(key);
      if (p.contains("enum")) EXPECT_NE(std::find(p["enum"].begin(), p["enum"].end(), value), p["enum"].end());
      if (p.value("type", "") == "number") EXPECT_TRUE(value.is_number());
      if (p.value("type", "") == "integer") EXPECT_TRUE(value.is_number_integer());
      if (p.contains("minimum")) EXPECT_GE(value.get<double>(), p["minimum"].get<double>());
    }
    for (const auto& req : schema.at("required")) EXPECT_TRUE(j.contains(req.get<std::string>()));
    if (s.kind == GuidanceKind::direction) EXPECT_TRUE(j.contains("theta"));
    if (s.kind == GuidanceKind::group) EXPECT_TRUE(j.contains("neighbor_id"));
  }
}
