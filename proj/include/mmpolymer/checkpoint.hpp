// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_CHECKPOINT_HPP_
#define MMPOLYMER_CHECKPOINT_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "mmpolymer/config.hpp"
#include "mmpolymer/params.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp {

// Normalization of a fine-tuned regression head.
struct HeadInfo {
  Modality modality = Modality::kBoth;
  double target_mean = 0.0;
  double target_std = 1.0;
};

struct Checkpoint {
  RunConfig config;  // model.seq.vocab_size equals vocab.size()
  psmiles::Vocabulary vocab;
  ParamStore params;
  std::optional<HeadInfo> head;
};

// Layout: 8-byte magic "MMPCKPT\0", u64 little-endian manifest length, JSON
// manifest {version, config, vocab, head?, tensors[{name, dtype, shape,
// offset}], payload_bytes}, then the little-endian f64 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream &out, const Checkpoint &checkpoint);
void save_checkpoint(const std::string &path, const Checkpoint &checkpoint);

// Errc::kCorruptPayload for bad magic, truncation or inconsistent offsets;
// Errc::kVersionMismatch for another format version.
Checkpoint load_checkpoint(std::istream &in);
Checkpoint load_checkpoint(const std::string &path);

// Errc::kVersionMismatch when the stored architecture differs from `model`
// or a tensor is missing or has the wrong shape.
void check_architecture(const Checkpoint &checkpoint, const ModelConfig &model);

FinetunedModel to_finetuned(const Checkpoint &checkpoint);

}  // namespace mmp

#endif  // MMPOLYMER_CHECKPOINT_HPP_
