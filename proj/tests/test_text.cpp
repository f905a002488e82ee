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
#include "guidecot/cot/text.hpp"
#include "guidecot/cot/tokenizer.hpp"

using namespace guidecot;
using namespace guidecot::cot;

TEST(CotSentence, ReproducesFigureCaption) {
  EXPECT_EQ(make_cot_sentence(0, {57.0, 95.0}, 12),
            "Pedestrian 0 will arrive at coordinate (57, 95) after the next 12 frames.");
  EXPECT_EQ(make_cot_sentence(3, {56.6, 94.5}, 8), "Pedestrian 3 will arrive at coordinate (57, 95) after the next 8 frames.");
  EXPECT_EQ(make_cot_sentence(1, {1.25, -0.004}, 12, 2),
            "Pedestrian 1 will arrive at coordinate (1.25, 0.00) after the next 12 frames.");
}

TEST(CotSentence, ParseInvertsTemplate) {
  Rng rng(31);
  for (int n = 0; n < 1000; ++n) {
    const std::int64_t i = uniform_int(rng, 0, 500);
    const Vec2 goal{std::round(uniform(rng, -50, 1000)), std::round(uniform(rng, -50, 1000))};
    const int tau = uniform_int(rng, 1, 40);
    const auto parsed = parse_cot(make_cot_sentence(i, goal, tau));
    EXPECT_EQ(parsed.pedestrian, i);
    EXPECT_EQ(parsed.goal.x, goal.x);
    EXPECT_EQ(parsed.goal.y, goal.y);
    EXPECT_EQ(parsed.tau_pred, tau);
  }
}

TEST(CotSentence, Errors) {
  EXPECT_THROW(make_cot_sentence(0, {std::nan(""), 1.0}, 12), Error);
  EXPECT_THROW(parse_cot("Pedestrian 0 will arrive at coordinate (57, 95) after the next 12 frames"), Error);
  EXPECT_THROW(parse_cot("Pedestrian 0 will arrive at (57, 95) after the next 12 frames."), Error);
}

TEST(Numbers, FormattingAndQuantization) {
  EXPECT_EQ(format_number(-0.04, 1), "0.0");
  EXPECT_EQ(format_number(2.25, 0), "2");
  EXPECT_EQ(format_number(-3.14159, 2), "-3.14");
  EXPECT_EQ(format_point({1.0, -2.5}, 1), "(1.0, -2.5)");
  EXPECT_THROW(format_number(INFINITY, 1), Error);
  EXPECT_THROW(format_number(1.0, 13), Error);
}

TEST(Answer, RoundTripAtConfiguredPrecision) {
  Rng rng(32);
  for (int n = 0; n < 1000; ++n) {
    const int decimals = uniform_int(rng, 0, 3);
    Trajectory t(12);
    for (auto& p : t) p = quantize(Vec2{uniform(rng, -30, 30), uniform(rng, -30, 30)}, decimals);
    const auto back = parse_answer(serialize_answer(t, decimals), 12);
    ASSERT_EQ(back.size(), t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      EXPECT_NEAR(back[k].x, t[k].x, 1e-12);
      EXPECT_NEAR(back[k].y, t[k].y, 1e-12);
    }
  }
}

TEST(Answer, MalformedTextIsDecodeFailure) {
  for (const char* text : {"", "(1.0, 2.0), (3.0", "(1.0, 2.0) (3.0, 4.0)", "(1.0, 2.0), (a, 4.0)", "(1.0, 2.0),"}) {
    try {
      parse_answer(text, 2);
      FAIL() << text;
    } catch (const DecodeError& e) {
      EXPECT_EQ(e.code(), ErrorCode::decode_failure);
      EXPECT_EQ(e.raw_text(), text);
    }
  }
  EXPECT_THROW(parse_answer("(1.0, 2.0)", 2), DecodeError);
  EXPECT_NO_THROW(parse_answer("(1.0, 2.0), (3, -4)", 2));
}

TEST(Question, SerializeParseRoundTrip) {
  const auto& data = fixtures::tiny_data();
  TextConfig cfg;
  cfg.decimals = 2;
  cfg.context_neighbors = 3;
  for (std::size_t n = 0; n < std::min<std::size_t>(data.windows.size(), 20); ++n) {
    const auto& w = data.windows[n];
    for (int i = 0; i < w.size(); ++i) {
      const auto q = parse_question(serialize_observation(w, i, cfg));
      EXPECT_EQ(q.target, i);
      EXPECT_EQ(q.tau_pred, w.tau_pred());
      EXPECT_EQ(static_cast<int>(q.pedestrians.size()), 1 + std::min(cfg.context_neighbors, w.size() - 1));
      const auto& past = w.past[static_cast<std::size_t>(i)];
      ASSERT_EQ(q.target_past().size(), past.size());
      for (std::size_t k = 0; k < past.size(); ++k) {
        EXPECT_NEAR(q.target_past()[k].x, past[k].x, 0.005 + 1e-12);
        EXPECT_NEAR(q.target_past()[k].y, past[k].y, 0.005 + 1e-12);
      }
    }
  }
  EXPECT_THROW(serialize_observation(data.windows.front(), 99, cfg), Error);
  EXPECT_THROW(parse_question("Pedestrian 0 moved along the trajectory (1, 2) for 2 frames. What trajectory does "
                              "pedestrian 0 follow for the next 12 frames?"),
               Error);
}

TEST(Tokenizer, RoundTripsPromptText) {
  const Tokenizer tok;
  const auto& data = fixtures::tiny_data();
  const auto& w = data.windows.front();
  TextConfig cfg;
  const std::string text = join_prompt(serialize_observation(w, 0, cfg), make_cot_sentence(0, {57, 95}, 12)) + " " +
                           serialize_answer(w.future.front(), 2);
  const auto ids = tok.encode(text);
  EXPECT_EQ(tok.decode(ids), text);
  for (int id : ids) {
    EXPECT_GT(id, Tokenizer::kEos);
    EXPECT_LT(id, tok.size());
  }
  auto with_markers = ids;
  with_markers.insert(with_markers.begin(), Tokenizer::kBos);
  with_markers.push_back(Tokenizer::kEos);
  EXPECT_EQ(tok.decode(with_markers), text);
}

TEST(Tokenizer, Errors) {
  const Tokenizer tok;
  for (const char* bad : {"Pedestrian ü", "walks", "x = 1", "\t"}) {
    try {
      tok.encode(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::tokenization);
    }
  }
  EXPECT_THROW(tok.decode({tok.size()}), Error);
  EXPECT_THROW(Tokenizer({"<bos>", "<pad>", "<eos>"}), Error);
  EXPECT_THROW(Tokenizer({"<pad>", "<bos>", "<eos>", "a", "a"}), Error);
  EXPECT_EQ(Tokenizer::from_json(tok.to_json()).vocabulary(), tok.vocabulary());
}
