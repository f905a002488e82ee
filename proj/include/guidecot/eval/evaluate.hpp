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

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/dataset/dataset.hpp"
#include "guidecot/eval/metrics.hpp"
#include "guidecot/pipeline.hpp"

namespace guidecot::eval {

struct EvalConfig {
  goal::SamplingConfig sampling;
  Selection selection{Selection::min_ade};
  std::uint64_t seed{0};
  int max_items{0};  // 0 evaluates every (window, pedestrian) pair; otherwise an evenly strided subset
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, sampling, selection, seed, max_items)

struct ItemResult {
  std::string window_id;
  std::int64_t pedestrian{0};
  std::string group;
  double ade{0.0};
  double fde{0.0};
  double cv_ade{0.0};
  double cv_fde{0.0};
  int fallbacks{0};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ItemResult, window_id, pedestrian, group, ade, fde, cv_ade, cv_fde, fallbacks)

struct GroupRow {
  std::string group;
  double ade{0.0};
  double fde{0.0};
  double cv_ade{0.0};
  double cv_fde{0.0};
  std::size_t items{0};
  std::size_t generations{0};
  std::size_t fallbacks{0};

  double fallback_rate() const { return generations ? static_cast<double>(fallbacks) / static_cast<double>(generations) : 0.0; }
};

inline void to_json(nlohmann::json& j, const GroupRow& r) {
  j = {{"group", r.group},     {"ade", r.ade},     {"fde", r.fde},
       {"cv_ade", r.cv_ade},   {"cv_fde", r.cv_fde}, {"items", r.items},
       {"generations", r.generations}, {"fallbacks", r.fallbacks}, {"fallback_rate", r.fallback_rate()}};
}

/// Per-group best-of-K metrics with an average row, alongside the constant-velocity baseline.
struct EvalTable {
  int k{0};
  Selection selection{Selection::min_ade};
  std::vector<GroupRow> rows;
  GroupRow average;
  std::vector<ItemResult> items;

  nlohmann::json to_json() const {
    return {{"k", k}, {"selection", selection}, {"rows", rows}, {"average", average}, {"items", items}};
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "group,ade,fde,cv_ade,cv_fde,items,fallback_rate\n";
    out.precision(6);
    out << std::fixed;
    auto line = [&](const GroupRow& r) {
      out << r.group << ',' << r.ade << ',' << r.fde << ',' << r.cv_ade << ',' << r.cv_fde << ',' << r.items << ','
          << r.fallback_rate() << '\n';
    };
    for (const auto& r : rows) line(r);
    line(average);
    return out.str();
  }

  std::string to_markdown() const {
    std::ostringstream out;
    out << "Best-of-" << k << " (selection: " << nlohmann::json(selection).get<std::string>() << ")\n\n";
    out << "| Group | ADE | FDE | CV ADE | CV FDE | Items | Fallback rate |\n";
    out << "|---|---|---|---|---|---|---|\n";
    char buf[256];
    auto line = [&](const GroupRow& r) {
      std::snprintf(buf, sizeof buf, "| %s | %.3f | %.3f | %.3f | %.3f | %zu | %.3f |\n", r.group.c_str(), r.ade, r.fde,
                    r.cv_ade, r.cv_fde, r.items, r.fallback_rate());
      out << buf;
    };
    for (const auto& r : rows) line(r);
    line(average);
    return out.str();
  }
};

/// Evaluation subset: every (window index, pedestrian index) pair, or an evenly strided subset.
inline std::vector<std::pair<std::size_t, int>> evaluation_items(const std::vector<dataset::ObservationWindow>& windows,
                                                                 int max_items) {
  std::vector<std::pair<std::size_t, int>> all;
  for (std::size_t w = 0; w < windows.size(); ++w)
    for (int i = 0; i < windows[w].size(); ++i) all.emplace_back(w, i);
  if (max_items <= 0 || all.size() <= static_cast<std::size_t>(max_items)) return all;
  std::vector<std::pair<std::size_t, int>> picked;
  const double step = static_cast<double>(all.size()) / max_items;
  for (int k = 0; k < max_items; ++k) picked.push_back(all[static_cast<std::size_t>(k * step)]);
  return picked;
}

inline EvalTable evaluate(const dataset::Dataset& data, const std::vector<dataset::ObservationWindow>& windows,
                          const Pipeline& pipeline, const EvalConfig& cfg) {
  EvalTable table;
  table.k = cfg.sampling.k;
  table.selection = cfg.selection;
  std::map<std::string, GroupRow> groups;
  const auto picks = evaluation_items(windows, cfg.max_items);
  if (picks.empty()) throw Error(ErrorCode::empty_dataset, "nothing to evaluate");
  for (std::size_t n = 0; n < picks.size(); ++n) {
    const auto& w = windows[picks[n].first];
    const int i = picks[n].second;
    const auto ui = static_cast<std::size_t>(i);
    const auto& scene = data.scene(w.scene_id);
    PredictOptions opts;
    opts.sampling = cfg.sampling;
    opts.seed = derive_seed(cfg.seed, n);
    const auto pred = pipeline.predict_full(scene, w, i, opts);
    std::vector<Trajectory> candidates;
    ItemResult item{w.id(), w.pedestrian_ids[ui], scene.group};
    for (const auto& p : pred.items) {
      candidates.push_back(p.generation.trajectory);
      item.fallbacks += p.generation.fallback ? 1 : 0;
    }
    const auto best = best_of_k(candidates, w.future[ui], cfg.selection);
    item.ade = best.ade;
    item.fde = best.fde;
    const auto cv = dataset::constant_velocity(w.past[ui], w.tau_pred());
    item.cv_ade = ade(cv, w.future[ui]);
    item.cv_fde = fde(cv, w.future[ui]);

    GroupRow& row = groups[scene.group];
    row.group = scene.group;
    row.ade += item.ade;
    row.fde += item.fde;
    row.cv_ade += item.cv_ade;
    row.cv_fde += item.cv_fde;
    ++row.items;
    row.generations += candidates.size();
    row.fallbacks += static_cast<std::size_t>(item.fallbacks);
    table.items.push_back(std::move(item));
  }
  table.average.group = "AVG";
  for (auto& [name, row] : groups) {
    const double n = static_cast<double>(row.items);
    row.ade /= n;
    row.fde /= n;
    row.cv_ade /= n;
    row.cv_fde /= n;
    table.rows.push_back(row);
    table.average.ade += row.ade;
    table.average.fde += row.fde;
    table.average.cv_ade += row.cv_ade;
    table.average.cv_fde += row.cv_fde;
    table.average.items += row.items;
    table.average.generations += row.generations;
    table.average.fallbacks += row.fallbacks;
  }
  const double g = static_cast<double>(table.rows.size());
  table.average.ade /= g;
  table.average.fde /= g;
  table.average.cv_ade /= g;
  table.average.cv_fde /= g;
  return table;
}

}  // namespace guidecot::eval
