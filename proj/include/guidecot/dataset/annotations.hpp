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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "guidecot/common/error.hpp"
#include "guidecot/common/geometry.hpp"

namespace guidecot::dataset {

struct RawAnnotation {
  std::int64_t frame_id{0};
  std::int64_t pedestrian_id{0};
  Vec2 position;

  friend bool operator==(const RawAnnotation&, const RawAnnotation&) = default;
};

enum class AnnotationFormat { eth_ucy_tsv };

namespace detail {

inline bool parse_integral(const std::string& token, std::int64_t& out) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  if (used != token.size() || !std::isfinite(v) || std::floor(v) != v) return false;
  out = static_cast<std::int64_t>(v);
  return true;
}

inline bool parse_real(const std::string& token, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == token.size();
}

}  // namespace detail

/// Sorts by (pedestrian_id, frame_id) and rejects duplicate (frame, pedestrian) pairs.
inline void canonicalize(std::vector<RawAnnotation>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const RawAnnotation& a, const RawAnnotation& b) {
    return std::pair(a.pedestrian_id, a.frame_id) < std::pair(b.pedestrian_id, b.frame_id);
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].pedestrian_id == rows[i - 1].pedestrian_id && rows[i].frame_id == rows[i - 1].frame_id) {
      throw Error(ErrorCode::duplicate_annotation,
                  "frame " + std::to_string(rows[i].frame_id) + ", pedestrian " +
                      std::to_string(rows[i].pedestrian_id) + " annotated twice");
    }
  }
}

/// Parses whitespace-separated `frame ped x y` rows. Blank lines are skipped.
inline std::vector<RawAnnotation> parse_annotations_text(const std::string& text) {
  std::vector<RawAnnotation> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    RawAnnotation row;
    double x = 0.0;
    double y = 0.0;
    if (tokens.size() != 4 || !detail::parse_integral(tokens[0], row.frame_id) ||
        !detail::parse_integral(tokens[1], row.pedestrian_id) || !detail::parse_real(tokens[2], x) ||
        !detail::parse_real(tokens[3], y)) {
      throw Error(ErrorCode::parse, "malformed annotation at line " + std::to_string(line_no) + ": '" + line + "'");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw Error(ErrorCode::parse, "non-finite position at line " + std::to_string(line_no));
    }
    row.position = {x, y};
    rows.push_back(row);
  }
  if (rows.empty()) throw Error(ErrorCode::empty_dataset, "annotation source contains no rows");
  canonicalize(rows);
  return rows;
}

inline std::vector<RawAnnotation> parse_annotations(const std::string& path,
                                                    AnnotationFormat format = AnnotationFormat::eth_ucy_tsv) {
  (void)format;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open annotations '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_annotations_text(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

/// Serializes with round-trippable precision, one row per line, tab separated.
inline std::string format_annotations(const std::vector<RawAnnotation>& rows) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& r : rows) {
    out << r.frame_id << '\t' << r.pedestrian_id << '\t' << r.position.x << '\t' << r.position.y << '\n';
  }
  return out.str();
}

inline void write_annotations(const std::string& path, const std::vector<RawAnnotation>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write annotations '" + path + "'");
  out << format_annotations(rows);
}

}  // namespace guidecot::dataset
