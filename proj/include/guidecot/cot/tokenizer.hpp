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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"

namespace guidecot::cot {

/// Numeric-aware character tokenizer: template words are single tokens, every digit, sign, point and
/// bracket is its own token, and the ", " pair separator is one token.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;

  Tokenizer() : Tokenizer(default_vocabulary()) {}

  explicit Tokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
    if (vocab_.size() < 3 || vocab_[0] != "<pad>" || vocab_[1] != "<bos>" || vocab_[2] != "<eos>") {
      throw Error(ErrorCode::configuration, "vocabulary must start with <pad>, <bos>, <eos>");
    }
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      if (!index_.emplace(vocab_[i], static_cast<int>(i)).second) {
        throw Error(ErrorCode::configuration, "duplicate vocabulary entry '" + vocab_[i] + "'");
      }
    }
  }

  static std::vector<std::string> default_vocabulary() {
    std::vector<std::string> v{"<pad>", "<bos>", "<eos>"};
    for (char c = '0'; c <= '9'; ++c) v.emplace_back(1, c);
    for (const char* s : {".", "-", "(", ")", ", ", ",", " ", "?"}) v.emplace_back(s);
    for (const char* w : {"Pedestrian", "pedestrian", "moved", "along", "the", "trajectory", "for", "frames", "What",
                          "does", "follow", "next", "will", "arrive", "at", "coordinate", "after"}) {
      v.emplace_back(w);
    }
    return v;
  }

  int size() const noexcept { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> ids;
    std::size_t i = 0;
    while (i < text.size()) {
      std::string piece;
      const auto c = static_cast<unsigned char>(text[i]);
      if (text.compare(i, 2, ", ") == 0) {
        piece = ", ";
      } else if (is_letter(c)) {
        std::size_t j = i;
        while (j < text.size() && is_letter(static_cast<unsigned char>(text[j]))) ++j;
        piece = std::string(text.substr(i, j - i));
      } else if (c >= 0x80) {
        std::size_t len = (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        len = std::min(len, text.size() - i);
        throw Error(ErrorCode::tokenization, "out-of-vocabulary symbol '" + std::string(text.substr(i, len)) + "'");
      } else {
        piece = std::string(1, text[i]);
      }
      const auto it = index_.find(piece);
      if (it == index_.end()) throw Error(ErrorCode::tokenization, "out-of-vocabulary symbol '" + piece + "'");
      ids.push_back(it->second);
      i += piece.size();
    }
    return ids;
  }

  std::string decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
      if (id < 0 || id >= size()) throw Error(ErrorCode::tokenization, "token id " + std::to_string(id) + " outside vocabulary");
      if (id == kPad || id == kBos || id == kEos) continue;
      out += vocab_[static_cast<std::size_t>(id)];
    }
    return out;
  }

  nlohmann::json to_json() const { return vocab_; }
  static Tokenizer from_json(const nlohmann::json& j) { return Tokenizer(j.get<std::vector<std::string>>()); }

 private:
  static bool is_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

  std::vector<std::string> vocab_;
  std::map<std::string, int, std::less<>> index_;
};

}  // namespace guidecot::cot
