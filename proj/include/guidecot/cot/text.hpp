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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"
#include "guidecot/dataset/windows.hpp"

namespace guidecot::cot {

struct TextConfig {
  int decimals{2};           // question and answer coordinates (world meters)
  int cot_decimals{0};       // goal coordinates in the CoT sentence (scene pixels)
  int context_neighbors{8};  // other pedestrians of the window serialized after the target
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TextConfig, decimals, cot_decimals, context_neighbors)

inline double quantize(double v, int decimals) {
  const double f = std::pow(10.0, decimals);
  const double q = std::round(v * f) / f;
  return q == 0.0 ? 0.0 : q;
}

inline Vec2 quantize(Vec2 p, int decimals) { return {quantize(p.x, decimals), quantize(p.y, decimals)}; }

inline std::string format_number(double v, int decimals) {
  if (!std::isfinite(v)) throw Error(ErrorCode::input, "cannot serialize a non-finite coordinate");
  if (decimals < 0 || decimals > 12) throw Error(ErrorCode::configuration, "decimals must lie in [0, 12]");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, quantize(v, decimals));
  return buf;
}

inline std::string format_point(Vec2 p, int decimals) {
  return "(" + format_number(p.x, decimals) + ", " + format_number(p.y, decimals) + ")";
}

inline std::string format_points(const Trajectory& pts, int decimals) {
  std::string out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ", ";
    out += format_point(pts[i], decimals);
  }
  return out;
}

namespace detail {

/// Minimal cursor over prompt text.
struct Cursor {
  const std::string& text;
  std::size_t pos{0};

  bool done() const { return pos == text.size(); }
  bool literal(std::string_view s) {
    if (text.compare(pos, s.size(), s) != 0) return false;
    pos += s.size();
    return true;
  }
  bool integer(std::int64_t& out) {
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start || pos - start > 18) return false;
    out = std::stoll(text.substr(start, pos - start));
    return true;
  }
  /// -?digits(.digits)?
  bool number(double& out) {
    const std::size_t start = pos;
    if (pos < text.size() && text[pos] == '-') ++pos;
    const std::size_t digits = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == digits) {
      pos = start;
      return false;
    }
    if (pos < text.size() && text[pos] == '.') {
      const std::size_t frac = ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == frac) {
        pos = start;
        return false;
      }
    }
    out = std::stod(text.substr(start, pos - start));
    return true;
  }
  bool point(Vec2& p) { return literal("(") && number(p.x) && literal(", ") && number(p.y) && literal(")"); }
  /// "(x, y)" pairs separated by ", ".
  bool points(Trajectory& out) {
    out.clear();
    Vec2 p;
    if (!point(p)) return false;
    out.push_back(p);
    while (true) {
      const std::size_t save = pos;
      if (!literal(", ") || text.compare(pos, 1, "(") != 0) {
        pos = save;
        return true;
      }
      if (!point(p)) return false;
      out.push_back(p);
    }
  }
};

inline bool parse_point_list(const std::string& text, Trajectory& out) {
  Cursor c{text};
  return c.points(out) && c.done();
}

inline std::string pedestrian_sentence(std::int64_t label, const Trajectory& past, int decimals) {
  return "Pedestrian " + std::to_string(label) + " moved along the trajectory " + format_points(past, decimals) +
         " for " + std::to_string(past.size()) + " frames.";
}

}  // namespace detail

/// Question for pedestrian i of the window. Pedestrians are labelled by their index in the window; the
/// target comes first, followed by up to `context_neighbors` others in window order.
inline std::string serialize_observation(const dataset::ObservationWindow& w, int i, const TextConfig& cfg) {
  if (i < 0 || i >= w.size()) throw Error(ErrorCode::reference, "pedestrian index " + std::to_string(i) + " outside window");
  const auto ui = static_cast<std::size_t>(i);
  std::string out = detail::pedestrian_sentence(i, w.past[ui], cfg.decimals);
  int added = 0;
  for (int j = 0; j < w.size() && added < cfg.context_neighbors; ++j) {
    if (j == i) continue;
    out += " " + detail::pedestrian_sentence(j, w.past[static_cast<std::size_t>(j)], cfg.decimals);
    ++added;
  }
  const int tau_pred = w.tau_pred() > 0 ? w.tau_pred() : 12;
  out += " What trajectory does pedestrian " + std::to_string(i) + " follow for the next " + std::to_string(tau_pred) +
         " frames?";
  return out;
}

/// Same as above for a bare observed track (no window), e.g. when serving an ad-hoc query.
inline std::string serialize_track(std::int64_t label, const Trajectory& past, int tau_pred, const TextConfig& cfg) {
  return detail::pedestrian_sentence(label, past, cfg.decimals) + " What trajectory does pedestrian " +
         std::to_string(label) + " follow for the next " + std::to_string(tau_pred) + " frames?";
}

struct ParsedQuestion {
  std::int64_t target{0};
  int tau_pred{0};
  std::vector<std::pair<std::int64_t, Trajectory>> pedestrians;  // target first

  const Trajectory& target_past() const { return pedestrians.front().second; }
};

inline ParsedQuestion parse_question(const std::string& text) {
  ParsedQuestion q;
  detail::Cursor c{text};
  auto fail = [&](const char* what) {
    return Error(ErrorCode::parse, std::string("malformed question (") + what + ") at offset " + std::to_string(c.pos));
  };
  while (true) {
    std::int64_t label = 0;
    std::int64_t frames = 0;
    Trajectory past;
    if (!c.literal("Pedestrian ")) break;
    if (!c.integer(label) || !c.literal(" moved along the trajectory ") || !c.points(past) || !c.literal(" for ") ||
        !c.integer(frames) || !c.literal(" frames.")) {
      throw fail("pedestrian sentence");
    }
    if (static_cast<std::size_t>(frames) != past.size()) throw fail("frame count");
    q.pedestrians.emplace_back(label, std::move(past));
    if (!c.literal(" ")) throw fail("separator");
  }
  std::int64_t target = 0;
  std::int64_t tau = 0;
  if (q.pedestrians.empty() || !c.literal("What trajectory does pedestrian ") || !c.integer(target) ||
      !c.literal(" follow for the next ") || !c.integer(tau) || !c.literal(" frames?") || !c.done()) {
    throw fail("query");
  }
  q.target = target;
  q.tau_pred = static_cast<int>(tau);
  if (q.pedestrians.front().first != q.target) throw Error(ErrorCode::parse, "question does not start with the target");
  return q;
}

/// "Pedestrian i will arrive at coordinate (x, y) after the next T frames."
inline std::string make_cot_sentence(std::int64_t i, Vec2 goal, int tau_pred, int decimals = 0) {
  if (!goal.finite()) throw Error(ErrorCode::input, "goal must be finite");
  return "Pedestrian " + std::to_string(i) + " will arrive at coordinate " + format_point(goal, decimals) +
         " after the next " + std::to_string(tau_pred) + " frames.";
}

struct ParsedCot {
  std::int64_t pedestrian{0};
  Vec2 goal;
  int tau_pred{0};
};

inline ParsedCot parse_cot(const std::string& text) {
  ParsedCot out;
  detail::Cursor c{text};
  std::int64_t tau = 0;
  if (!c.literal("Pedestrian ") || !c.integer(out.pedestrian) || !c.literal(" will arrive at coordinate ") ||
      !c.point(out.goal) || !c.literal(" after the next ") || !c.integer(tau) || !c.literal(" frames.") || !c.done()) {
    throw Error(ErrorCode::parse, "not a goal sentence: '" + text + "'");
  }
  out.tau_pred = static_cast<int>(tau);
  return out;
}

inline std::string serialize_answer(const Trajectory& future, int decimals) { return format_points(future, decimals); }

/// Parses generated answer text; anything but exactly `expected` well-formed pairs is a decode failure.
inline Trajectory parse_answer(const std::string& text, int expected) {
  Trajectory out;
  if (!detail::parse_point_list(text, out)) throw DecodeError("malformed trajectory text", text);
  if (static_cast<int>(out.size()) != expected) {
    throw DecodeError("expected " + std::to_string(expected) + " coordinate pairs, got " + std::to_string(out.size()), text);
  }
  for (const auto& p : out) {
    if (!p.finite()) throw DecodeError("non-finite coordinate", text);
  }
  return out;
}

/// Encoder input: question followed by the goal sentence.
inline std::string join_prompt(const std::string& question, const std::string& cot) { return question + " " + cot; }

}  // namespace guidecot::cot
