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
#include "guidecot/cot/generate.hpp"
#include "guidecot/cot/training.hpp"

using namespace guidecot;
using namespace guidecot::cot;

namespace {

std::vector<SeqExample> tiny_examples(const Seq2Seq& model, std::size_t n) {
  const auto& data = fixtures::tiny_data();
  std::vector<dataset::ObservationWindow> windows(data.windows.begin(), data.windows.begin() + 3);
  auto items = make_llm_examples(model, data, windows);
  items.resize(std::min(items.size(), n));
  return items;
}

}  // namespace

TEST(Seq2Seq, IncrementalDecodeMatchesFullDecode) {
  const Seq2Seq model(fixtures::tiny_llm_config());
  const auto items = tiny_examples(model, 1);
  const auto& e = items.front();
  std::vector<int> inputs{Tokenizer::kBos};
  inputs.insert(inputs.end(), e.answer.begin(), e.answer.begin() + 10);
  nn::NoGradGuard guard;
  const auto memory = model.encode({e.source});
  const auto full = model.decode(memory, {static_cast<int>(e.source.size())}, {inputs});
  auto session = model.start(e.source);
  const int vocab = model.tokenizer().size();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Eigen::VectorXd step = model.step(session, inputs[t]);
    for (int v = 0; v < vocab; ++v) EXPECT_NEAR(step(v), full->value[t * vocab + static_cast<std::size_t>(v)], 1e-9);
  }
}

TEST(Seq2Seq, PackedBatchLossEqualsTokenWeightedMean) {
  const Seq2Seq model(fixtures::tiny_llm_config());
  const auto items = tiny_examples(model, 3);
  ASSERT_EQ(items.size(), 3u);
  nn::NoGradGuard guard;
  const double packed = model.loss({&items[0], &items[1], &items[2]})->value[0];
  double total = 0.0, tokens = 0.0;
  for (const auto& e : items) {
    const double n = static_cast<double>(target_token_count(e));
    total += model.loss({&e})->value[0] * n;
    tokens += n;
  }
  EXPECT_NEAR(packed, total / tokens, 1e-10);
}

TEST(Seq2Seq, CheckpointRoundTrip) {
  fixtures::TempDir dir("seq");
  const Seq2Seq model(fixtures::tiny_llm_config());
  model.save(dir.file("m.json"));
  const auto back = Seq2Seq::load(dir.file("m.json"));
  EXPECT_EQ(back.weights_hash(), model.weights_hash());
  const auto items = tiny_examples(model, 1);
  Rng a(1), b(1);
  DecodeConfig decode;
  decode.max_tokens = 20;
  EXPECT_EQ(model.generate(items[0].source, decode, a), back.generate(items[0].source, decode, b));
  EXPECT_THROW(Seq2Seq::load(dir.file("missing.json")), Error);
  std::ofstream(dir.file("bad.json")) << "{\"format\":\"guidecot-goal\"}";
  EXPECT_THROW(Seq2Seq::load(dir.file("bad.json")), Error);
}

TEST(Seq2Seq, ArchitectureValidation) {
  auto cfg = fixtures::tiny_llm_config();
  cfg.heads = 3;
  EXPECT_THROW(Seq2Seq{cfg}, Error);
  cfg = fixtures::tiny_llm_config();
  cfg.context_length = 16;
  const Seq2Seq short_model(cfg);
  const auto items = tiny_examples(short_model, 1);
  EXPECT_THROW(short_model.start(items[0].source), Error);
}

TEST(Seq2Seq, TrainingReducesLossOnTinySet) {
  Seq2Seq model(fixtures::tiny_llm_config());
  auto items = tiny_examples(model, 8);
  LlmTrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.learning_rate = 5e-3;
  cfg.warmup_steps = 0;
  const auto report = train_llm(model, items, cfg);
  EXPECT_LT(report.final_ce(), 0.5 * report.initial_ce);
  EXPECT_EQ(report.curve.size(), 30u);
  EXPECT_NEAR(mean_ce(model, items), report.final_ce(), 0.5 * report.final_ce());
}

TEST(Decoding, GreedyChoiceAndNucleus) {
  Eigen::VectorXd logits(4);
  logits << 0.1, 3.0, 0.2, -1.0;
  Rng rng(3);
  DecodeConfig greedy;
  EXPECT_EQ(Seq2Seq::choose(logits, greedy, rng), 1);
  DecodeConfig nucleus;
  nucleus.temperature = 1.0;
  nucleus.top_p = 0.5;
  for (int n = 0; n < 200; ++n) EXPECT_EQ(Seq2Seq::choose(logits, nucleus, rng), 1);
  nucleus.top_p = 1.0;
  std::vector<int> seen(4, 0);
  for (int n = 0; n < 4000; ++n) ++seen[static_cast<std::size_t>(Seq2Seq::choose(logits, nucleus, rng))];
  for (int c : seen) EXPECT_GT(c, 0);
}

TEST(Decoding, UntrainedModelFallsBackToConstantVelocity) {
  const Seq2Seq model(fixtures::tiny_llm_config());
  const auto& w = fixtures::tiny_data().windows.front();
  const auto prompt = join_prompt(serialize_observation(w, 0, model.config().text), make_cot_sentence(0, {10, 10}, 12));
  const auto r = generate_with_fallback(model, prompt, w.past[0], w.tau_pred(), model.config().decode, 5);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.attempts, model.config().decode.retries + 1);
  EXPECT_FALSE(r.error.empty());
  const auto cv = dataset::constant_velocity(w.past[0], w.tau_pred());
  ASSERT_EQ(r.trajectory.size(), cv.size());
  for (std::size_t k = 0; k < cv.size(); ++k) EXPECT_EQ(r.trajectory[k], cv[k]);
  const auto again = generate_with_fallback(model, prompt, w.past[0], w.tau_pred(), model.config().decode, 5);
  EXPECT_EQ(again.raw_text, r.raw_text);
}
