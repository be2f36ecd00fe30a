// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_SEQ_ENCODER_HPP_
#define MMPOLYMER_SEQ_ENCODER_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mmpolymer/autodiff.hpp"
#include "mmpolymer/params.hpp"
#include "mmpolymer/rng.hpp"

namespace mmp {

struct SeqConfig {
  std::size_t dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 128;
  std::size_t max_length = 128;
  std::size_t vocab_size = 0;

  // 6 layers, 12 heads at width 768.
  static SeqConfig full_scale(std::size_t vocab_size);
  void validate() const;  // Errc::kConfigError / kOddDimension
};

// Sinusoidal position code: sin at even components, cos at odd ones,
// frequency 10000^(-2i/d).
std::vector<double> positional_embedding(std::size_t pos, std::size_t dim);
Tensor positional_table(std::size_t length, std::size_t dim);

// Registers seq.* and mlm.* parameters: weights N(0, 0.02), biases 0,
// layer-norm gains 1.
void init_seq_params(ParamStore &params, const SeqConfig &config, Rng &rng);

struct SeqOutput {
  ad::Var tokens;  // T x d after the final layer norm
  ad::Var pooled;  // 1 x d, the [CLS] row
};

// Pre-norm transformer over token ids. [PAD] keys are excluded from
// attention.
SeqOutput encode_sequence(Binding &params, const SeqConfig &config, std::span<const int> ids);

// Row-softmax of the masked-prediction head at `positions`; |M| x |V|.
ad::Var mlm_probabilities(Binding &params, const SeqConfig &config, const ad::Var &tokens,
                          std::span<const std::size_t> positions);

}  // namespace mmp

#endif  // MMPOLYMER_SEQ_ENCODER_HPP_
