// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_ABLATION_HPP_
#define MMPOLYMER_ABLATION_HPP_

#include <functional>
#include <string>
#include <vector>

#include "mmpolymer/config.hpp"
#include "mmpolymer/conformer.hpp"
#include "mmpolymer/finetune.hpp"

namespace mmp {

struct AblationInputs {
  std::vector<std::string> corpus;
  std::vector<Conformer> conformers;  // chain_embed for anything missing
  std::vector<PropertyDataset> datasets;
};

struct AblationRow {
  psmiles::StarStrategy strategy = psmiles::StarStrategy::kSubstitute;
  TaskToggles tasks;
  std::vector<EvalReport> results;  // one per dataset
  std::vector<TraceRow> trace;      // empty when nothing was pretrained
  double seconds = 0.0;
};

struct AblationReport {
  std::string modality;
  std::vector<std::string> datasets;
  std::vector<AblationRow> strategy_rows;  // keep, remove, substitute; all tasks on
  std::vector<AblationRow> task_rows;      // eight toggle rows; configured strategy

  // Two tables: metric x strategy and metric x (1D pre, 3D pre, Contrast).
  std::string to_table() const;
  std::string to_json() const;
};

// Toggle rows from no pretraining up to all three tasks.
std::vector<TaskToggles> ablation_task_order();

using AblationProgress = std::function<void(const std::string &)>;

// Pretrains one model per row and cross-validates it on every dataset. The
// substitute row of the strategy table is the all-tasks row of the toggle
// table when the configured strategy is substitute, and is run once.
AblationReport run_ablation(const AblationInputs &inputs, const RunConfig &config,
                            const AblationProgress &progress = {});

}  // namespace mmp

#endif  // MMPOLYMER_ABLATION_HPP_
