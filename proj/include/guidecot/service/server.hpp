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
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "guidecot/common/log.hpp"
#include "guidecot/service/api.hpp"
#include "guidecot/service/runlog.hpp"

namespace guidecot::service {

/// HTTP front end over an Api. Prediction exchanges are appended to the run log.
class Server {
 public:
  Server(SessionState& session, std::unique_ptr<RunLog> runs = nullptr) : api_(session), runs_(std::move(runs)) {
    const int threads = session.config().threads;
    http_.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    http_.set_logger([](const httplib::Request& req, const httplib::Response& res) {
      log::info("http ", req.method, " ", req.path, " ", res.status);
    });
    routes();
  }

  Api& api() noexcept { return api_; }

  /// Binds and serves until stop(); port 0 picks a free port (see bound_port()).
  bool bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = http_.bind_to_any_port(host);
      return port_ > 0;
    }
    port_ = port;
    return http_.bind_to_port(host, port);
  }
  bool listen() { return http_.listen_after_bind(); }
  int bound_port() const noexcept { return port_; }
  bool running() const { return http_.is_running(); }
  void wait_until_ready() const { http_.wait_until_ready(); }
  /// Stops accepting connections; queued requests finish before the worker pool exits.
  void stop() { http_.stop(); }

 private:
  template <typename F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      const auto err = to_api_error(e);
      res.status = err.status;
      res.set_content(err.body.dump(), "application/json");
    } catch (const nlohmann::json::parse_error& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", {{"code", "parse"}, {"message", e.what()}}}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump(), "application/json");
    }
  }

  static void json_reply(httplib::Response& res, const nlohmann::json& j) { res.set_content(j.dump(), "application/json"); }

  static nlohmann::json body_json(const httplib::Request& req) {
    return req.body.empty() ? nlohmann::json() : nlohmann::json::parse(req.body);
  }

  void predict_route(const char* path, bool guided) {
    http_.Post(path, [this, path, guided](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto ex = api_.predict(body_json(req), guided);
        if (runs_) runs_->append(path, ex);
        json_reply(res, ex.response);
      });
    });
  }

  void routes() {
    http_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { json_reply(res, api_.health()); });
    });
    http_.Get("/schema/guidance", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { json_reply(res, guidance::spec_schema()); });
    });
    http_.Get("/scenes", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { json_reply(res, api_.scenes()); });
    });
    http_.Get(R"(/scenes/([^/]+)/image)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto png = api_.scene_image(req.matches[1]);
        res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
      });
    });
    http_.Get(R"(/scenes/([^/]+)/windows)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { json_reply(res, api_.windows(req.matches[1])); });
    });
    predict_route("/predict", false);
    predict_route("/guided_predict", true);
    http_.Post("/reload", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { json_reply(res, api_.reload(body_json(req))); });
    });
  }

  Api api_;
  std::unique_ptr<RunLog> runs_;
  httplib::Server http_;
  int port_{0};
};

}  // namespace guidecot::service
