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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/hash.hpp"
#include "guidecot/common/log.hpp"
#include "guidecot/eval/evaluate.hpp"
#include "guidecot/goal/training.hpp"

namespace guidecot::eval {

/// One ablation cell: a goal-module variant trained without `held_out` and evaluated on it.
struct ExperimentSpec {
  std::string label;  // row name in the report
  std::string held_out;
  render::VisualPromptStyle style;
  goal::EncoderBackend backend{goal::EncoderBackend::toy_cnn};
  goal::ConditionMode mode{goal::ConditionMode::both};
  std::uint64_t seed{0};
  int k{20};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentSpec, label, held_out, style, backend, mode, seed, k)

struct AblationContext {
  const dataset::Dataset* data{nullptr};
  goal::GoalModelConfig goal_config;  // style, backend, mode and seeds are overridden per cell
  goal::GoalTrainConfig goal_training;
  EvalConfig eval;
  /// Sequence model trained without the held-out group (shared by every cell of that split).
  std::function<const cot::Seq2Seq&(const std::string& held_out)> llm_for;
  std::string out_dir;  // cell cache and report files; empty disables both
};

struct CellResult {
  ExperimentSpec spec;
  bool ok{false};
  bool cache_hit{false};
  std::string error;
  double ade{0.0};
  double fde{0.0};
  double cv_fde{0.0};
  double fallback_rate{0.0};
};

inline void to_json(nlohmann::json& j, const CellResult& c) {
  j = {{"spec", c.spec}, {"ok", c.ok},   {"error", c.error},   {"ade", c.ade},
       {"fde", c.fde},   {"cv_fde", c.cv_fde}, {"fallback_rate", c.fallback_rate}};
}

inline void from_json(const nlohmann::json& j, CellResult& c) {
  c.spec = j.at("spec").get<ExperimentSpec>();
  c.ok = j.at("ok").get<bool>();
  c.error = j.value("error", "");
  c.ade = j.at("ade").get<double>();
  c.fde = j.at("fde").get<double>();
  c.cv_fde = j.value("cv_fde", 0.0);
  c.fallback_rate = j.value("fallback_rate", 0.0);
}

struct AblationReport {
  std::vector<CellResult> cells;

  std::size_t cache_hits() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.cache_hit ? 1 : 0;
    return n;
  }

  /// Cells sharing a label, in first-seen order.
  std::vector<std::pair<std::string, std::vector<const CellResult*>>> rows() const {
    std::vector<std::pair<std::string, std::vector<const CellResult*>>> out;
    for (const auto& c : cells) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& r) { return r.first == c.spec.label; });
      if (it == out.end()) {
        out.emplace_back(c.spec.label, std::vector<const CellResult*>{});
        it = out.end() - 1;
      }
      it->second.push_back(&c);
    }
    return out;
  }

  std::vector<std::string> groups() const {
    std::vector<std::string> out;
    for (const auto& c : cells)
      if (std::find(out.begin(), out.end(), c.spec.held_out) == out.end()) out.push_back(c.spec.held_out);
    return out;
  }

  /// Mean FDE of a label's successful cells for one held-out group (NaN if none).
  static double fde_for(const std::vector<const CellResult*>& row, const std::string& group) {
    double total = 0.0;
    int n = 0;
    for (const auto* c : row) {
      if (c->spec.held_out == group && c->ok) {
        total += c->fde;
        ++n;
      }
    }
    return n ? total / n : std::numeric_limits<double>::quiet_NaN();
  }

  /// Rows = labels, columns = FDE per held-out group and their average.
  std::string to_markdown() const {
    const auto gs = groups();
    std::ostringstream out;
    out << "| Configuration |";
    for (const auto& g : gs) out << ' ' << g << " |";
    out << " Avg. |\n|---|";
    for (std::size_t i = 0; i <= gs.size(); ++i) out << "---|";
    out << '\n';
    char buf[64];
    for (const auto& [label, row] : rows()) {
      out << "| " << label << " |";
      double total = 0.0;
      for (const auto& g : gs) {
        const double f = fde_for(row, g);
        total += f;
        std::snprintf(buf, sizeof buf, " %.3f |", f);
        out << (std::isnan(f) ? std::string(" failed |") : std::string(buf));
      }
      std::snprintf(buf, sizeof buf, " %.3f |\n", total / static_cast<double>(gs.size()));
      out << (std::isnan(total) ? std::string(" failed |\n") : std::string(buf));
    }
    return out.str();
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "label,held_out,mode,backend,style,seed,k,ok,ade,fde,cv_fde,fallback_rate,error\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& c : cells) {
      out << c.spec.label << ',' << c.spec.held_out << ',' << nlohmann::json(c.spec.mode).get<std::string>() << ','
          << goal::backend_name(c.spec.backend) << ',' << c.spec.style.name() << ',' << c.spec.seed << ',' << c.spec.k << ','
          << (c.ok ? 1 : 0) << ',' << c.ade << ',' << c.fde << ',' << c.cv_fde << ',' << c.fallback_rate << ",\""
          << c.error << "\"\n";
    }
    return out.str();
  }
};

inline std::string cell_key(const ExperimentSpec& spec, const AblationContext& ctx) {
  const nlohmann::json j{{"spec", spec}, {"goal", ctx.goal_config}, {"train", ctx.goal_training}, {"eval", ctx.eval}};
  return fnv1a_hex(j.dump());
}

/// Trains and evaluates every cell; failures are recorded and the run continues. Completed cells are
/// cached under out_dir/cells and reused on rerun.
inline AblationReport run_ablation(const std::vector<ExperimentSpec>& grid, const AblationContext& ctx) {
  if (grid.empty()) throw Error(ErrorCode::input, "ablation grid is empty");
  if (!ctx.data || !ctx.llm_for) throw Error(ErrorCode::configuration, "ablation needs a dataset and sequence models");
  namespace fs = std::filesystem;
  const fs::path cell_dir = ctx.out_dir.empty() ? fs::path() : fs::path(ctx.out_dir) / "cells";
  if (!cell_dir.empty()) fs::create_directories(cell_dir);

  AblationReport report;
  for (const auto& spec : grid) {
    const std::string key = cell_key(spec, ctx);
    const fs::path cache = cell_dir.empty() ? fs::path() : cell_dir / (key + ".json");
    if (!cache.empty() && fs::exists(cache)) {
      std::ifstream in(cache);
      CellResult cached = nlohmann::json::parse(in).get<CellResult>();
      cached.cache_hit = true;
      log::info("ablation cell ", spec.label, "/", spec.held_out, " loaded from cache");
      report.cells.push_back(std::move(cached));
      continue;
    }
    CellResult cell;
    cell.spec = spec;
    try {
      goal::GoalModelConfig gc = ctx.goal_config;
      gc.style = spec.style;
      gc.encoder.backend = spec.backend;
      gc.unet.mode = spec.mode;
      gc.unet.seed = derive_seed(spec.seed, 1);
      goal::GoalTrainConfig tc = ctx.goal_training;
      tc.seed = derive_seed(spec.seed, 2);
      const auto split = dataset::leave_one_out_split(*ctx.data, spec.held_out);
      goal::GoalPredictor model(gc);
      goal::train_goal_module(model, goal::make_goal_items(model, *ctx.data, split.train), tc);
      if (!cell_dir.empty()) model.save((cell_dir / (key + ".goal.json")).string());
      EvalConfig ec = ctx.eval;
      ec.sampling.k = spec.k;
      ec.seed = derive_seed(spec.seed, 3);
      const auto table = evaluate(*ctx.data, split.test, Pipeline(model, ctx.llm_for(spec.held_out)), ec);
      cell.ok = true;
      cell.ade = table.average.ade;
      cell.fde = table.average.fde;
      cell.cv_fde = table.average.cv_fde;
      cell.fallback_rate = table.average.fallback_rate();
    } catch (const std::exception& e) {
      cell.error = e.what();
      log::error("ablation cell ", spec.label, "/", spec.held_out, " failed: ", e.what());
    }
    if (!cache.empty() && cell.ok) {
      std::ofstream out(cache);
      out << nlohmann::json(cell).dump(2);
    }
    report.cells.push_back(std::move(cell));
  }
  if (!ctx.out_dir.empty()) {
    std::ofstream(fs::path(ctx.out_dir) / "ablation.csv") << report.to_csv();
    std::ofstream(fs::path(ctx.out_dir) / "ablation.md") << report.to_markdown();
  }
  return report;
}

}  // namespace guidecot::eval
