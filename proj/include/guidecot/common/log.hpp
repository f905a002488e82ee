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

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace guidecot::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::info};
  return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline void write(Level level, std::string_view message) {
  if (level < threshold().load()) return;
  static std::mutex mutex;
  static constexpr std::string_view names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mutex);
  std::cerr << "[guidecot " << names[static_cast<int>(level)] << "] " << message << '\n';
}

template <typename... Args>
void emit(Level level, const Args&... args) {
  if (level < threshold().load()) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <typename... Args> void debug(const Args&... args) { emit(Level::debug, args...); }
template <typename... Args> void info(const Args&... args) { emit(Level::info, args...); }
template <typename... Args> void warn(const Args&... args) { emit(Level::warn, args...); }
template <typename... Args> void error(const Args&... args) { emit(Level::error, args...); }

}  // namespace guidecot::log
