// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_CLI_HPP_
#define MMPOLYMER_CLI_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mmpolymer/finetune.hpp"

namespace mmp {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

// `args` excludes the program name. Results go to `out`, progress and
// diagnostics to `err`.
int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Rows of psmiles, value (blank when absent), then the embedding components.
void export_embeddings(std::ostream &out, std::span<const Polymer> polymers,
                       std::span<const std::string> values, const ParamStore &params,
                       const ModelConfig &config, Modality modality);

}  // namespace mmp

#endif  // MMPOLYMER_CLI_HPP_
