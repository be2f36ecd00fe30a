// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_FINETUNE_HPP_
#define MMPOLYMER_FINETUNE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmpolymer/pretrain.hpp"

namespace mmp {

enum class Modality { kOneD, kThreeD, kBoth };

Modality parse_modality(std::string_view name);  // "1d", "3d", "both"
std::string_view modality_name(Modality modality) noexcept;
bool uses_sequence(Modality m) noexcept;
bool uses_structure(Modality m) noexcept;

struct PropertyRecord {
  std::string psmiles;
  double value = 0.0;
};

struct PropertyDataset {
  std::string name;
  std::vector<PropertyRecord> records;
  std::optional<std::pair<double, double>> range;

  // Errc::kMalformedRecord for non-finite or out-of-range values.
  void validate() const;
  std::vector<std::string> psmiles() const;
  std::vector<double> values() const;
};

// Header `psmiles,value`, one record per line.
PropertyDataset read_property_csv(std::istream &in, std::string name = "property");
PropertyDataset load_property_csv(const std::string &path);
void write_property_csv(std::ostream &out, const PropertyDataset &dataset);

// Polymers with sequences only; conformers are attached where available.
std::vector<Polymer> prepare_for_modality(std::span<const std::string> psmiles,
                                          std::span<const Conformer> conformers,
                                          bool chain_embed_missing,
                                          const psmiles::Vocabulary &vocab,
                                          psmiles::StarStrategy strategy,
                                          const ModelConfig &config);

double rmse(std::span<const double> pred, std::span<const double> target);
// Errc::kConstantTargets when the targets have no spread.
double r_squared(std::span<const double> pred, std::span<const double> target);

struct FinetuneConfig {
  std::size_t folds = 5;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  AdamConfig adam{1e-3, 0.9, 0.99, 1e-6};
  std::size_t head_hidden = 64;
  bool freeze_encoder = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Seeded permutation cut into k contiguous folds whose sizes differ by at
// most one. Errc::kTooFewRecords when n < k.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k,
                                                      std::uint64_t seed);

std::size_t representation_dim(const ModelConfig &config, Modality modality);

// 1 x D input of the regression head: X_1d, X_3d or [X_1d, X_3d].
ad::Var represent(Binding &params, const ModelConfig &config, Modality modality,
                  const Polymer &polymer);

// head.w1 (D x hidden), head.b1, head.w2 (hidden x 1), head.b2.
void init_head(ParamStore &params, std::size_t input_dim, std::size_t hidden, Rng &rng);
ad::Var head_forward(Binding &params, const ad::Var &representation);

struct FinetunedModel {
  ModelConfig config;
  Modality modality = Modality::kOneD;
  ParamStore params;
  double target_mean = 0.0;
  double target_std = 1.0;
};

// Head output de-normalized with the training-split statistics.
double predict_property(const FinetunedModel &model, const Polymer &polymer);
std::vector<double> predict_properties(const FinetunedModel &model,
                                       std::span<const Polymer> polymers);

// Z-scores the targets, then trains the head and (unless frozen) the
// encoder of the chosen modality with Adam.
FinetunedModel train_regressor(std::span<const Polymer> polymers, std::span<const double> targets,
                               const ParamStore &pretrained, const ModelConfig &config,
                               Modality modality, const FinetuneConfig &ft);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct EvalReport {
  std::string modality;
  std::vector<FoldResult> folds;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  // sample std, n - 1
  double r2_mean = 0.0;
  double r2_std = 0.0;

  std::string to_json() const;
  std::string to_table() const;
};

EvalReport summarize(std::string modality, std::vector<FoldResult> folds);

// Folds run in parallel on independent parameter copies.
EvalReport run_cross_validation(std::span<const Polymer> polymers, std::span<const double> targets,
                                const ParamStore &pretrained, const ModelConfig &config,
                                Modality modality, const FinetuneConfig &ft);

}  // namespace mmp

#endif  // MMPOLYMER_FINETUNE_HPP_
