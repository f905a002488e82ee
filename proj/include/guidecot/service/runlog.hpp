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

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/service/api.hpp"

namespace guidecot::service {

struct RunRecord {
  int schema_version{kSchemaVersion};
  std::string timestamp;
  std::string endpoint;
  nlohmann::json request;
  nlohmann::json response;
  nlohmann::json checkpoints;
};

inline void to_json(nlohmann::json& j, const RunRecord& r) {
  j = {{"schema_version", r.schema_version}, {"timestamp", r.timestamp}, {"endpoint", r.endpoint},
       {"request", r.request}, {"response", r.response}, {"checkpoints", r.checkpoints}};
}

inline void from_json(const nlohmann::json& j, RunRecord& r) {
  r.schema_version = j.at("schema_version").get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.endpoint = j.at("endpoint").get<std::string>();
  r.request = j.at("request");
  r.response = j.at("response");
  r.checkpoints = j.at("checkpoints");
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

/// Append-only JSON-lines log of prediction requests. Each record is one line written under a lock;
/// a failed write truncates back to the last complete record.
class RunLog {
 public:
  explicit RunLog(const std::string& dir) : path_(std::filesystem::path(dir) / "runs.jsonl") {
    std::filesystem::create_directories(dir);
  }

  const std::filesystem::path& path() const noexcept { return path_; }

  void append(const std::string& endpoint, const Exchange& ex) {
    RunRecord rec{kSchemaVersion, utc_timestamp(), endpoint, ex.request, ex.response, ex.checkpoints};
    const std::string line = nlohmann::json(rec).dump() + "\n";
    std::lock_guard lock(mutex_);
    const auto before = std::filesystem::exists(path_) ? std::filesystem::file_size(path_) : 0;
    std::FILE* f = std::fopen(path_.c_str(), "ab");
    if (!f) throw Error(ErrorCode::io, "cannot open run log '" + path_.string() + "'");
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size();
    const bool closed = std::fclose(f) == 0;
    if (!ok || !closed) {
      std::error_code ec;
      std::filesystem::resize_file(path_, before, ec);
      throw Error(ErrorCode::io, "failed to append run record to '" + path_.string() + "'");
    }
  }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Parses every record; a malformed line is reported with its line number.
inline std::vector<RunRecord> read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open run log '" + path + "'");
  std::vector<RunRecord> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<RunRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse, "run log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// Re-executes a record against the current models. Fails if the checkpoints differ from the record's.
inline nlohmann::json replay(const Api& api, const RunRecord& record) {
  const bool guided = record.endpoint == "/guided_predict";
  if (!guided && record.endpoint != "/predict") throw Error(ErrorCode::input, "cannot replay endpoint " + record.endpoint);
  const auto health = api.health();
  if (health.at("checkpoints") != record.checkpoints) {
    throw Error(ErrorCode::load, "loaded checkpoints differ from the recorded ones");
  }
  return api.predict(record.request, guided).response;
}

}  // namespace guidecot::service
