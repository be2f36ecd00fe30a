// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_CONFIG_HPP_
#define MMPOLYMER_CONFIG_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/finetune.hpp"
#include "mmpolymer/pretrain.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp {

// Everything a run needs besides file paths. seq.vocab_size is filled from
// the vocabulary when one is built or loaded.
struct RunConfig {
  ModelConfig model;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  psmiles::StarStrategy strategy = psmiles::StarStrategy::kSubstitute;
  TaskToggles tasks;
  Modality modality = Modality::kBoth;
  std::uint64_t seed = 0;

  // Propagates `seed` into the pretrain and finetune sections.
  void sync_seed();
  // Everything except the vocabulary size, which is checked later.
  void validate() const;
};

// Documented flat keys, in a stable order.
const std::vector<std::string> &config_keys();

// Sets one key from its textual form; Errc::kConfigError for unknown keys
// or unparsable values.
void apply_setting(RunConfig &config, std::string_view key, std::string_view value);

// Flat JSON object of documented keys applied on top of `base`.
RunConfig parse_config(std::string_view json_text, RunConfig base = {});
RunConfig load_config(const std::string &path, RunConfig base = {});
std::string config_to_json(const RunConfig &config);

}  // namespace mmp

#endif  // MMPOLYMER_CONFIG_HPP_
