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

// guidecot command line: data synthesis, training, evaluation, ablations, plots and the HTTP service.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "guidecot/common/allocator.hpp"
#include "guidecot/config.hpp"
#include "guidecot/eval/ablation.hpp"
#include "guidecot/eval/plot.hpp"
#include "guidecot/eval/steering.hpp"
#include "guidecot/service/server.hpp"
#include "guidecot/workflow.hpp"

namespace fs = std::filesystem;
using namespace guidecot;

namespace {

ProjectConfig load_or_default(const std::string& path) { return path.empty() ? ProjectConfig::desk() : load_config(path); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  out << text;
}

std::string arg_or(const std::string& value, const std::string& fallback) { return value.empty() ? fallback : value; }

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

/// Ablation grids shaped after the three comparisons: prompt styles, conditioning branches, encoder backends.
std::vector<eval::ExperimentSpec> preset_grid(const std::string& name, const ProjectConfig& cfg,
                                              const std::vector<std::string>& groups, int seeds) {
  std::vector<eval::ExperimentSpec> grid;
  auto add = [&](const std::string& label, render::VisualPromptStyle style, goal::EncoderBackend backend,
                 goal::ConditionMode mode) {
    for (int s = 0; s < seeds; ++s)
      for (const auto& g : groups)
        grid.push_back({label, g, style, backend, mode, static_cast<std::uint64_t>(s), cfg.eval.sampling.k});
  };
  const auto base = cfg.goal_model.style;
  if (name == "styles") {
    for (auto shape : {render::PromptShape::arrow, render::PromptShape::points}) {
      for (auto color : {render::PromptColor::red, render::PromptColor::green, render::PromptColor::blue}) {
        auto style = base;
        style.color = color;
        style.shape = shape;
        add(style.name(), style, cfg.goal_model.encoder.backend, cfg.goal_model.unet.mode);
      }
    }
  } else if (name == "conditions") {
    for (auto mode : {goal::ConditionMode::sem_only, goal::ConditionMode::vis_only, goal::ConditionMode::both}) {
      add(nlohmann::json(mode).get<std::string>(), base, cfg.goal_model.encoder.backend, mode);
    }
  } else if (name == "backends") {
    for (auto backend : {goal::EncoderBackend::imagenet_resnet50, goal::EncoderBackend::clip_resnet50,
                         goal::EncoderBackend::toy_cnn}) {
      add(goal::backend_name(backend), base, backend, cfg.goal_model.unet.mode);
    }
  } else {
    throw Error(ErrorCode::configuration, "unknown ablation preset '" + name + "' (styles, conditions, backends)");
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Goal-guided trajectory prediction: training, evaluation and steering service"};
  app.require_subcommand(1);
  std::string config_path;
  bool verbose = false;
  app.add_option("-c,--config", config_path, "Project config JSON (defaults to the desk preset)");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // config
  auto* cmd_config = app.add_subcommand("config", "Print a preset configuration");
  std::string preset = "desk";
  cmd_config->add_option("--preset", preset, "desk or full")->check(CLI::IsMember({"desk", "full"}));

  // schema
  auto* cmd_schema = app.add_subcommand("schema", "Print the GuidanceSpec JSON schema");

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "Write the configured synthetic dataset to disk");
  std::string synth_out;
  cmd_synth->add_option("--out", synth_out, "Output directory")->required();

  // train-goal
  auto* cmd_tg = app.add_subcommand("train-goal", "Train the goal module on a leave-one-out split");
  std::string tg_out, tg_curve, held_out;
  cmd_tg->add_option("--out", tg_out, "Checkpoint path")->required();
  cmd_tg->add_option("--curve", tg_curve, "Loss curve CSV (default: <out>.curve.csv)");
  cmd_tg->add_option("--split", held_out, "Held-out group (default from config)");

  // train-llm
  auto* cmd_tl = app.add_subcommand("train-llm", "Train the sequence model on a leave-one-out split");
  std::string tl_out, tl_curve;
  cmd_tl->add_option("--out", tl_out, "Checkpoint path")->required();
  cmd_tl->add_option("--curve", tl_curve, "Loss curve CSV (default: <out>.curve.csv)");
  cmd_tl->add_option("--split", held_out, "Held-out group (default from config)");

  // shared prediction options
  std::string goal_ckpt, llm_ckpt, window_id, guidance_json, out_path;
  int pedestrian = 0;
  int k = 0;
  std::uint64_t seed = 0;

  auto* cmd_gen = app.add_subcommand("generate", "Predict K trajectories for one pedestrian (JSON to stdout)");
  for (auto* c : {cmd_gen}) {
    c->add_option("--goal-ckpt", goal_ckpt)->required();
    c->add_option("--llm-ckpt", llm_ckpt)->required();
    c->add_option("--window", window_id, "Window id, e.g. synth0:40")->required();
    c->add_option("--pedestrian", pedestrian, "Pedestrian index within the window");
    c->add_option("--k", k, "Number of trajectories");
    c->add_option("--seed", seed);
    c->add_option("--guidance", guidance_json, "GuidanceSpec as JSON");
  }

  auto* cmd_eval = app.add_subcommand("eval", "Best-of-K ADE/FDE on the held-out group");
  std::string eval_out;
  cmd_eval->add_option("--goal-ckpt", goal_ckpt)->required();
  cmd_eval->add_option("--llm-ckpt", llm_ckpt)->required();
  cmd_eval->add_option("--split", held_out, "Held-out group (default from config)");
  cmd_eval->add_option("--k", k, "Number of samples");
  cmd_eval->add_option("--out", eval_out, "Directory for eval.json / eval.csv / eval.md");

  auto* cmd_ablate = app.add_subcommand("ablate", "Train and evaluate a grid of goal-module variants");
  std::string grid_path, ablate_preset, ablate_out = "ablation";
  int seeds = 1;
  std::vector<std::string> groups;
  cmd_ablate->add_option("--grid", grid_path, "JSON array of experiment specs");
  cmd_ablate->add_option("--preset", ablate_preset, "styles, conditions or backends");
  cmd_ablate->add_option("--groups", groups, "Held-out groups for preset grids (default: all)");
  cmd_ablate->add_option("--seeds", seeds, "Seeds per preset cell");
  cmd_ablate->add_option("--out", ablate_out, "Output directory (cell cache, CSV, markdown)");

  auto* cmd_steer = app.add_subcommand("steer", "Guidance-strength sweep on the held-out group");
  cmd_steer->add_option("--goal-ckpt", goal_ckpt)->required();
  cmd_steer->add_option("--split", held_out);
  cmd_steer->add_option("--out", out_path, "CSV path (default: stdout)");

  auto* cmd_plot = app.add_subcommand("plot", "Overlay predictions on the scene image");
  cmd_plot->add_option("--goal-ckpt", goal_ckpt)->required();
  cmd_plot->add_option("--llm-ckpt", llm_ckpt)->required();
  cmd_plot->add_option("--window", window_id)->required();
  cmd_plot->add_option("--pedestrian", pedestrian);
  cmd_plot->add_option("--k", k);
  cmd_plot->add_option("--seed", seed);
  cmd_plot->add_option("--guidance", guidance_json);
  cmd_plot->add_option("--out", out_path, "PNG path")->required();

  auto* cmd_serve = app.add_subcommand("serve", "Run the HTTP steering service");

  CLI11_PARSE(app, argc, argv);
  log::set_level(verbose ? log::Level::debug : log::Level::info);

  try {
    if (cmd_config->parsed()) {
      std::cout << nlohmann::json(preset == "full" ? ProjectConfig::full() : ProjectConfig::desk()).dump(2) << '\n';
      return 0;
    }
    if (cmd_schema->parsed()) {
      std::cout << guidance::spec_schema().dump(2) << '\n';
      return 0;
    }

    ProjectConfig cfg = load_or_default(config_path);
    held_out = arg_or(held_out, cfg.held_out);
    const auto data = cfg.data.load();

    if (cmd_synth->parsed()) {
      std::cout << dataset::save_dataset(data, synth_out) << '\n';
      return 0;
    }
    if (cmd_tg->parsed()) {
      auto trained = train_goal_split(cfg, data, held_out);
      trained.model.save(tg_out, trained.report.to_json(cfg.goal_training));
      goal::write_curve_csv(arg_or(tg_curve, tg_out + ".curve.csv"), trained.report.curve);
      log::info("goal module: BCE ", trained.report.initial_bce, " -> ", trained.report.final_bce(), " on ",
                trained.report.items, " items (", trained.report.excluded.size(), " excluded)");
      return 0;
    }
    if (cmd_tl->parsed()) {
      auto trained = train_llm_split(cfg, data, held_out);
      trained.model.save(tl_out, trained.report.to_json(cfg.llm_training));
      goal::write_curve_csv(arg_or(tl_curve, tl_out + ".curve.csv"), trained.report.curve);
      log::info("sequence model: CE ", trained.report.initial_ce, " -> ", trained.report.final_ce());
      return 0;
    }
    if (cmd_gen->parsed() || cmd_plot->parsed()) {
      ServiceConfig scfg = cfg.service;
      if (k > 0) scfg.default_k = k;
      service::SessionState session(data, scfg);
      session.reload(goal_ckpt, llm_ckpt);
      service::Api api(session);
      nlohmann::json req{{"window_id", window_id}, {"pedestrian", pedestrian}, {"seed", seed}};
      if (!guidance_json.empty()) req["guidance"] = nlohmann::json::parse(guidance_json);
      const auto ex = api.predict(req, !guidance_json.empty());
      if (cmd_gen->parsed()) {
        std::cout << ex.response.dump(2) << '\n';
        return 0;
      }
      const auto& w = session.window(window_id);
      eval::Overlay overlay(data.scene(w.scene_id));
      const auto ui = static_cast<std::size_t>(pedestrian);
      overlay.truth(w.future[ui]);
      for (const auto& t : ex.response.at("trajectories")) {
        Trajectory world;
        for (const auto& p : t.at("world")) world.push_back({p[0].get<double>(), p[1].get<double>()});
        overlay.prediction(world);
      }
      for (const auto& t : ex.response.at("trajectories")) {
        const auto& g = t.at("goal").at("world");
        overlay.goal({g[0].get<double>(), g[1].get<double>()});
      }
      overlay.past(w.past[ui]);
      overlay.save(out_path);
      return 0;
    }
    if (cmd_eval->parsed()) {
      const auto goal_model = goal::GoalPredictor::load(goal_ckpt);
      const auto llm = cot::Seq2Seq::load(llm_ckpt);
      eval::EvalConfig ec = cfg.eval;
      if (k > 0) ec.sampling.k = k;
      const auto split = dataset::leave_one_out_split(data, held_out);
      const auto table = eval::evaluate(data, split.test, Pipeline(goal_model, llm), ec);
      std::cout << table.to_markdown();
      if (!eval_out.empty()) {
        write_text(fs::path(eval_out) / "eval.json", table.to_json().dump(2));
        write_text(fs::path(eval_out) / "eval.csv", table.to_csv());
        write_text(fs::path(eval_out) / "eval.md", table.to_markdown());
      }
      return 0;
    }
    if (cmd_ablate->parsed()) {
      std::vector<eval::ExperimentSpec> grid;
      if (!grid_path.empty()) {
        std::ifstream in(grid_path);
        if (!in) throw Error(ErrorCode::io, "cannot open grid '" + grid_path + "'");
        grid = nlohmann::json::parse(in).get<std::vector<eval::ExperimentSpec>>();
      } else if (!ablate_preset.empty()) {
        grid = preset_grid(ablate_preset, cfg, groups.empty() ? data.groups : groups, seeds);
      }
      std::map<std::string, cot::Seq2Seq> llms;
      eval::AblationContext ctx{&data, cfg.goal_model, cfg.goal_training, cfg.eval, nullptr, ablate_out};
      ctx.llm_for = [&](const std::string& group) -> const cot::Seq2Seq& {
        auto it = llms.find(group);
        if (it != llms.end()) return it->second;
        const fs::path path = fs::path(ablate_out) / ("llm_" + group + ".json");
        if (fs::exists(path)) return llms.emplace(group, cot::Seq2Seq::load(path.string())).first->second;
        auto trained = train_llm_split(cfg, data, group);
        fs::create_directories(ablate_out);
        trained.model.save(path.string(), trained.report.to_json(cfg.llm_training));
        return llms.emplace(group, std::move(trained.model)).first->second;
      };
      const auto report = eval::run_ablation(grid, ctx);
      std::cout << report.to_markdown();
      log::info(report.cache_hits(), " of ", report.cells.size(), " cells loaded from cache");
      return 0;
    }
    if (cmd_steer->parsed()) {
      const auto goal_model = goal::GoalPredictor::load(goal_ckpt);
      const auto split = dataset::leave_one_out_split(data, held_out);
      const auto sweep = eval::steering_sweep(data, split.test, goal_model, cfg.steering);
      if (out_path.empty()) std::cout << sweep.to_csv();
      else write_text(out_path, sweep.to_csv());
      log::info("left monotone ", sweep.left_monotone(), ", right monotone ", sweep.right_monotone(),
                ", group monotone ", sweep.group_monotone(), ", stop monotone ", sweep.stop_monotone());
      return 0;
    }
    if (cmd_serve->parsed()) {
      apply_env_overrides(cfg.service);
      service::SessionState session(data, cfg.service);
      if (!cfg.service.goal_checkpoint.empty() && !cfg.service.llm_checkpoint.empty()) {
        session.reload(cfg.service.goal_checkpoint, cfg.service.llm_checkpoint);
      } else {
        log::warn("no checkpoints configured; prediction endpoints answer 503 until POST /reload");
      }
      service::Server server(session, std::make_unique<service::RunLog>(cfg.service.run_dir));
      if (!server.bind(cfg.service.host, cfg.service.port)) {
        throw Error(ErrorCode::configuration, "cannot bind service.port " + std::to_string(cfg.service.port));
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      log::info("serving on http://", cfg.service.host, ":", server.bound_port());
      server.listen();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
