// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_PRETRAIN_HPP_
#define MMPOLYMER_PRETRAIN_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/conformer.hpp"
#include "mmpolymer/params.hpp"
#include "mmpolymer/psmiles.hpp"
#include "mmpolymer/seq_encoder.hpp"
#include "mmpolymer/struct_encoder.hpp"

namespace mmp {

struct ModelConfig {
  SeqConfig seq;
  StructConfig structure;
  std::size_t contrast_dim = 64;

  void validate() const;
};

// Both encoders, the masked-prediction head, the coordinate decoder and the
// two contrastive projectors (contrast.proj1d, contrast.proj3d).
ParamStore init_model(const ModelConfig &config, std::uint64_t seed);

struct TaskToggles {
  bool mlm = true;
  bool denoise = true;
  bool contrast = true;

  bool any() const noexcept { return mlm || denoise || contrast; }
  // "mlm,denoise,contrast" style list; "none" for all off.
  static TaskToggles parse(std::string_view list);
  std::string to_string() const;
  static std::vector<TaskToggles> all_combinations();
};

struct PretrainConfig {
  std::size_t batch_size = 16;
  std::size_t steps = 300;
  AdamConfig adam;
  double tau = 0.1;
  double noise_scale = 1.0;
  psmiles::MaskingPolicy masking;
  std::uint64_t seed = 0;

  void validate() const;  // Errc::kConfigError
};

// One polymer ready for training: encoded tokens of the star-transformed
// string and its conformer with the virtual atom.
struct Polymer {
  std::string psmiles;  // as given in the corpus
  std::vector<int> ids;
  VirtualizedConformer conformer;
};

// Conformers are matched to corpus lines by the transformed string or, failing
// that, the raw one. Errc::kDataMisaligned when neither is present.
std::vector<Polymer> prepare_polymers(std::span<const std::string> corpus,
                                      std::span<const Conformer> conformers,
                                      const psmiles::Vocabulary &vocab,
                                      psmiles::StarStrategy strategy, const ModelConfig &config);

// Same, with chain_embed layouts of the transformed strings.
std::vector<Polymer> prepare_polymers(std::span<const std::string> corpus,
                                      const psmiles::Vocabulary &vocab,
                                      psmiles::StarStrategy strategy, const ModelConfig &config);

// One P-SMILES per line; blank lines and surrounding whitespace ignored.
std::vector<std::string> read_corpus(std::istream &in);
std::vector<std::string> load_corpus(const std::string &path);

// Vocabulary over the transformed corpus.
psmiles::Vocabulary build_vocabulary(std::span<const std::string> corpus,
                                     psmiles::StarStrategy strategy);

// Corrupted views of one polymer. A task that is switched off leaves its
// view clean.
struct PretrainSample {
  psmiles::MaskedSequence masked;
  NoisyConformer noisy;
  StructInput input;  // built from the noisy coordinates
};

PretrainSample make_sample(const Polymer &polymer, const psmiles::Vocabulary &vocab,
                           const ModelConfig &model, const PretrainConfig &config,
                           TaskToggles toggles, Rng &rng);

// Mean over samples with a non-empty mask set; 0 when there are none.
ad::Var masked_prediction_loss(Binding &params, const SeqConfig &config,
                               std::span<const SeqOutput> encoded,
                               std::span<const psmiles::MaskedSequence> masks);

// Smooth-L1 between reconstructed and clean coordinates over real atoms.
ad::Var coordinate_denoising_loss(Binding &params, const StructOutput &encoded,
                                  const NoisyConformer &noisy);

// One-directional InfoNCE of K x d_c rows: anchors z1, candidates z3.
ad::Var info_nce(const ad::Var &z1, const ad::Var &z3, double tau);

ad::Var contrastive_alignment_loss(Binding &params, const ad::Var &x1d, const ad::Var &x3d,
                                   double tau);

struct LossBreakdown {
  double l_1d = 0.0;
  double l_3d = 0.0;
  double l_contrast = 0.0;
  double total = 0.0;
};

struct LossResult {
  ad::Var total;
  LossBreakdown parts;
};

LossResult total_loss(Binding &params, const ModelConfig &config,
                      std::span<const PretrainSample> batch, TaskToggles toggles, double tau);

struct TraceRow {
  std::size_t step = 0;
  LossBreakdown loss;
};

using ProgressFn = std::function<void(const TraceRow &)>;

struct PretrainResult {
  ParamStore params;
  std::vector<TraceRow> trace;
};

// Shuffled mini-batches, fresh masks and noise for every batch, one Adam
// step per batch. Errc::kNumericFailure messages carry the step index.
PretrainResult run_pretraining(std::span<const Polymer> polymers,
                               const psmiles::Vocabulary &vocab, const ModelConfig &model,
                               const PretrainConfig &config, TaskToggles toggles,
                               ParamStore initial, const ProgressFn &progress = {});

// step,l_1d,l_3d,l_contrast,total
void write_trace_csv(std::ostream &out, std::span<const TraceRow> trace);

// Mean of one loss component over trace rows [begin, end).
double trace_mean(std::span<const TraceRow> trace, std::size_t begin, std::size_t end,
                  double LossBreakdown::*component);

// Top-1 matched-pair retrieval: the fraction of polymers whose projected 1D
// embedding is most similar to its own projected 3D embedding. Clean
// inputs.
double retrieval_accuracy(const ParamStore &params, const ModelConfig &config,
                          std::span<const Polymer> polymers);

}  // namespace mmp

#endif  // MMPOLYMER_PRETRAIN_HPP_
