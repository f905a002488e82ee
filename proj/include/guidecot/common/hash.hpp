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
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace guidecot {

/// FNV-1a 64-bit, used for checkpoint and config fingerprints.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001B3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(std::span<const double> values) { update(values.data(), values.size_bytes()); }

  std::uint64_t digest() const { return state_; }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[v & 0xF];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_{0xCBF29CE484222325ULL};
};

inline std::string fnv1a_hex(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.hex();
}

}  // namespace guidecot
