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

#include <string>

#include "guidecot/common/error.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/cot/text.hpp"
#include "guidecot/cot/transformer.hpp"
#include "guidecot/dataset/windows.hpp"

namespace guidecot::cot {

/// Decodes one trajectory for an encoder prompt; malformed output raises DecodeError with the raw text.
inline Trajectory generate_trajectory(const Seq2Seq& model, const std::string& prompt, int tau_pred,
                                      const DecodeConfig& decode, Rng& rng) {
  const auto ids = model.generate(model.tokenizer().encode(prompt), decode, rng);
  return parse_answer(model.tokenizer().decode(ids), tau_pred);
}

struct GenerationResult {
  Trajectory trajectory;
  bool fallback{false};  // constant-velocity extrapolation after exhausting retries
  int attempts{0};
  std::string raw_text;  // last generated text
  std::string error;     // last decode failure, if any
};

/// Generation with up to `decode.retries` reseeded retries, then constant-velocity fallback. Retries
/// sample with at least temperature 0.5 so a greedy failure is not simply repeated.
inline GenerationResult generate_with_fallback(const Seq2Seq& model, const std::string& prompt, const Trajectory& past_world,
                                               int tau_pred, const DecodeConfig& decode, std::uint64_t seed) {
  GenerationResult result;
  const auto source = model.tokenizer().encode(prompt);
  for (int attempt = 0; attempt <= decode.retries; ++attempt) {
    DecodeConfig cfg = decode;
    if (attempt > 0) cfg.temperature = std::max(cfg.temperature, 0.5);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    ++result.attempts;
    const auto ids = model.generate(source, cfg, rng);
    result.raw_text = model.tokenizer().decode(ids);
    try {
      result.trajectory = parse_answer(result.raw_text, tau_pred);
      result.error.clear();
      return result;
    } catch (const DecodeError& e) {
      result.error = e.what();
    }
  }
  result.fallback = true;
  result.trajectory = dataset::constant_velocity(past_world, tau_pred);
  return result;
}

}  // namespace guidecot::cot
