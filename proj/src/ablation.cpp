// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/ablation.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "mmpolymer/error.hpp"

namespace mmp {

namespace {

using json = nlohmann::ordered_json;

constexpr psmiles::StarStrategy kStrategies[] = {psmiles::StarStrategy::kKeep,
                                                 psmiles::StarStrategy::kRemove,
                                                 psmiles::StarStrategy::kSubstitute};

const char *strategy_label(psmiles::StarStrategy s) {
  switch (s) {
    case psmiles::StarStrategy::kKeep: return "Star Keep";
    case psmiles::StarStrategy::kRemove: return "Star Remove";
    case psmiles::StarStrategy::kSubstitute: return "Star Substitution";
  }
  return "?";
}

AblationRow run_row(const AblationInputs &inputs, const RunConfig &config,
                    psmiles::StarStrategy strategy, TaskToggles tasks,
                    const AblationProgress &progress) {
  const auto t0 = std::chrono::steady_clock::now();
  AblationRow row;
  row.strategy = strategy;
  row.tasks = tasks;

  const auto vocab = build_vocabulary(inputs.corpus, strategy);
  ModelConfig model = config.model;
  model.seq.vocab_size = vocab.size();
  ParamStore params = init_model(model, config.seed);
  if (tasks.any()) {
    const auto corpus = prepare_for_modality(inputs.corpus, inputs.conformers, true, vocab, strategy, model);
    PretrainConfig pc = config.pretrain;
    pc.seed = config.seed;
    auto result = run_pretraining(corpus, vocab, model, pc, tasks, std::move(params));
    params = std::move(result.params);
    row.trace = std::move(result.trace);
  }
  FinetuneConfig ft = config.finetune;
  ft.seed = config.seed;
  for (const auto &ds : inputs.datasets) {
    const auto names = ds.psmiles();
    const auto values = ds.values();
    const auto polymers = prepare_for_modality(names, inputs.conformers, true, vocab, strategy, model);
    row.results.push_back(run_cross_validation(polymers, values, params, model, config.modality, ft));
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (progress) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "ablation: strategy=%s tasks=%s done in %.1fs",
                  std::string(psmiles::strategy_name(strategy)).c_str(), tasks.to_string().c_str(),
                  row.seconds);
    progress(buf);
  }
  return row;
}

std::string cell(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f +- %.3f", mean, sd);
  return buf;
}

const char *mark(bool on) { return on ? "yes" : "no"; }

}  // namespace

std::vector<TaskToggles> ablation_task_order() {
  return {{false, false, false}, {true, false, false}, {false, true, false}, {false, false, true},
          {true, false, true},   {false, true, true},  {true, true, false},  {true, true, true}};
}

AblationReport run_ablation(const AblationInputs &inputs, const RunConfig &config,
                            const AblationProgress &progress) {
  config.validate();
  if (inputs.datasets.empty()) throw Error(Errc::kConfigError, "ablation needs at least one dataset");
  AblationReport report;
  report.modality = std::string(modality_name(config.modality));
  for (const auto &ds : inputs.datasets) report.datasets.push_back(ds.name);

  for (const auto &tasks : ablation_task_order())
    report.task_rows.push_back(run_row(inputs, config, config.strategy, tasks, progress));
  const TaskToggles all{true, true, true};
  for (auto s : kStrategies) {
    if (s == config.strategy) {
      report.strategy_rows.push_back(report.task_rows.back());
      continue;
    }
    report.strategy_rows.push_back(run_row(inputs, config, s, all, progress));
  }
  return report;
}

std::string AblationReport::to_table() const {
  std::ostringstream out;
  auto header = [&](const std::string &lead) {
    out << lead;
    for (const auto &d : datasets) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " | %-17s", d.c_str());
      out << buf;
    }
    out << "\n";
  };
  auto values = [&](const AblationRow &row, bool rmse) {
    std::string s;
    for (const auto &r : row.results)
      s += " | " + (rmse ? cell(r.rmse_mean, r.rmse_std) : cell(r.r2_mean, r.r2_std));
    return s;
  };

  out << "Data processing strategies (all pretraining tasks, modality " << modality << ")\n";
  header("Metric | Strategy          ");
  for (int m = 0; m < 2; ++m)
    for (const auto &row : strategy_rows) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%-6s | %-18s", m == 0 ? "RMSE" : "R2", strategy_label(row.strategy));
      out << buf << values(row, m == 0) << "\n";
    }
  out << "\nPretraining tasks (strategy "
      << (task_rows.empty() ? "" : std::string(psmiles::strategy_name(task_rows[0].strategy)))
      << ", modality " << modality << ")\n";
  header("Metric | 1D pre | 3D pre | Contrast");
  for (int m = 0; m < 2; ++m)
    for (const auto &row : task_rows) {
      char buf[80];
      std::snprintf(buf, sizeof buf, "%-6s | %-6s | %-6s | %-8s", m == 0 ? "RMSE" : "R2",
                    mark(row.tasks.mlm), mark(row.tasks.denoise), mark(row.tasks.contrast));
      out << buf << values(row, m == 0) << "\n";
    }
  return out.str();
}

std::string AblationReport::to_json() const {
  auto row_json = [&](const AblationRow &row) {
    json r;
    r["strategy"] = std::string(psmiles::strategy_name(row.strategy));
    r["tasks"] = row.tasks.to_string();
    r["seconds"] = row.seconds;
    json res = json::object();
    for (std::size_t i = 0; i < row.results.size(); ++i)
      res[datasets[i]] = json::parse(row.results[i].to_json());
    r["results"] = std::move(res);
    return r;
  };
  json j;
  j["modality"] = modality;
  j["datasets"] = datasets;
  j["strategies"] = json::array();
  for (const auto &row : strategy_rows) j["strategies"].push_back(row_json(row));
  j["tasks"] = json::array();
  for (const auto &row : task_rows) j["tasks"].push_back(row_json(row));
  return j.dump(2) + "\n";
}

}  // namespace mmp
