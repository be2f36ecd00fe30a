// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/finetune.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mmpolymer/error.hpp"

namespace mmp {

Modality parse_modality(std::string_view name) {
  if (name == "1d") return Modality::kOneD;
  if (name == "3d") return Modality::kThreeD;
  if (name == "both") return Modality::kBoth;
  throw Error(Errc::kConfigError, "unknown modality '" + std::string(name) + "' (1d, 3d, both)");
}

std::string_view modality_name(Modality modality) noexcept {
  switch (modality) {
    case Modality::kOneD: return "1d";
    case Modality::kThreeD: return "3d";
    case Modality::kBoth: return "both";
  }
  return "?";
}

bool uses_sequence(Modality m) noexcept { return m != Modality::kThreeD; }
bool uses_structure(Modality m) noexcept { return m != Modality::kOneD; }

void PropertyDataset::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double v = records[i].value;
    if (!std::isfinite(v))
      throw Error(Errc::kMalformedRecord, "record " + std::to_string(i + 1) + ": non-finite value");
    if (range && (v < range->first || v > range->second))
      throw Error(Errc::kMalformedRecord, "record " + std::to_string(i + 1) + ": value outside [" +
                                              std::to_string(range->first) + ", " +
                                              std::to_string(range->second) + "]");
  }
}

std::vector<std::string> PropertyDataset::psmiles() const {
  std::vector<std::string> out;
  for (const auto &r : records) out.push_back(r.psmiles);
  return out;
}

std::vector<double> PropertyDataset::values() const {
  std::vector<double> out;
  for (const auto &r : records) out.push_back(r.value);
  return out;
}

PropertyDataset read_property_csv(std::istream &in, std::string name) {
  PropertyDataset ds;
  ds.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "psmiles,value")
        throw Error(Errc::kMalformedRecord, "expected header 'psmiles,value'");
      header = true;
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0)
      throw Error(Errc::kMalformedRecord, "line " + std::to_string(lineno) + ": expected psmiles,value");
    PropertyRecord r;
    r.psmiles = line.substr(0, comma);
    const std::string field = line.substr(comma + 1);
    std::size_t used = 0;
    try {
      r.value = std::stod(field, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != field.size())
      throw Error(Errc::kMalformedRecord, "line " + std::to_string(lineno) + ": bad value '" + field + "'");
    ds.records.push_back(std::move(r));
  }
  if (!header) throw Error(Errc::kMalformedRecord, "empty dataset file");
  ds.validate();
  return ds;
}

PropertyDataset load_property_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open dataset " + path);
  return read_property_csv(in, path);
}

void write_property_csv(std::ostream &out, const PropertyDataset &dataset) {
  out << "psmiles,value\n";
  char buf[64];
  for (const auto &r : dataset.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.psmiles << ',' << buf << '\n';
  }
}

std::vector<Polymer> prepare_for_modality(std::span<const std::string> psmiles,
                                          std::span<const Conformer> conformers,
                                          bool chain_embed_missing,
                                          const psmiles::Vocabulary &vocab,
                                          psmiles::StarStrategy strategy,
                                          const ModelConfig &config) {
  std::map<std::string, const Conformer *, std::less<>> by_name;
  for (const auto &c : conformers) by_name.emplace(c.psmiles, &c);
  std::vector<Polymer> out;
  out.reserve(psmiles.size());
  for (const auto &s : psmiles) {
    const std::string converted = psmiles::transform_stars(s, strategy);
    Polymer p;
    p.psmiles = s;
    p.ids = psmiles::encode_ids(psmiles::tokenize(converted), vocab);
    if (p.ids.size() > config.seq.max_length)
      throw Error(Errc::kLengthExceeded, "'" + converted + "' exceeds max_length");
    auto it = by_name.find(converted);
    if (it == by_name.end()) it = by_name.find(s);
    if (it != by_name.end())
      p.conformer = add_virtual_atom(*it->second);
    else if (chain_embed_missing)
      p.conformer = add_virtual_atom(chain_embed(converted));
    out.push_back(std::move(p));
  }
  return out;
}

double rmse(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty() || pred.size() != target.size())
    throw Error(Errc::kShapeMismatch, "rmse needs equal, non-zero lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty() || pred.size() != target.size())
    throw Error(Errc::kShapeMismatch, "r_squared needs equal, non-zero lengths");
  const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (target[i] - pred[i]) * (target[i] - pred[i]);
    ss_tot += (target[i] - mean) * (target[i] - mean);
  }
  if (ss_tot == 0.0) throw Error(Errc::kConstantTargets, "R^2 undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

void FinetuneConfig::validate() const {
  if (folds < 2) throw Error(Errc::kConfigError, "folds must be >= 2");
  if (batch_size == 0) throw Error(Errc::kConfigError, "ft_batch_size must be >= 1");
  if (head_hidden == 0) throw Error(Errc::kConfigError, "head_hidden must be >= 1");
  if (!(adam.lr > 0.0)) throw Error(Errc::kConfigError, "ft_lr must be > 0");
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k,
                                                      std::uint64_t seed) {
  if (k == 0) throw Error(Errc::kConfigError, "fold count must be positive");
  if (n < k)
    throw Error(Errc::kTooFewRecords, std::to_string(n) + " records for " + std::to_string(k) + " folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, 21));
  rng.shuffle(perm);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0; f < k; ++f)
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(f * n / k),
                    perm.begin() + static_cast<std::ptrdiff_t>((f + 1) * n / k));
  return folds;
}

std::size_t representation_dim(const ModelConfig &config, Modality modality) {
  std::size_t d = 0;
  if (uses_sequence(modality)) d += config.seq.dim;
  if (uses_structure(modality)) d += config.structure.atom_dim;
  return d;
}

ad::Var represent(Binding &params, const ModelConfig &config, Modality modality,
                  const Polymer &polymer) {
  std::vector<ad::Var> parts;
  if (uses_sequence(modality)) parts.push_back(encode_sequence(params, config.seq, polymer.ids).pooled);
  if (uses_structure(modality)) {
    if (polymer.conformer.size() == 0)
      throw Error(Errc::kMissingConformer, "no conformer for '" + polymer.psmiles + "'");
    parts.push_back(encode_structure(params, config.structure,
                                     make_struct_input(polymer.conformer, config.structure))
                        .pooled);
  }
  return parts.size() == 1 ? parts[0] : ad::concat_cols(parts);
}

void init_head(ParamStore &params, std::size_t input_dim, std::size_t hidden, Rng &rng) {
  params.add("head.w1", normal_tensor(input_dim, hidden, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng));
  params.add("head.b1", Tensor::matrix(1, hidden));
  params.add("head.w2", normal_tensor(hidden, 1, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
  params.add("head.b2", Tensor::matrix(1, 1));
}

ad::Var head_forward(Binding &params, const ad::Var &representation) {
  using namespace ad;
  Var h = gelu(add_row(matmul(representation, params["head.w1"]), params["head.b1"]));
  return add_row(matmul(h, params["head.w2"]), params["head.b2"]);
}

double predict_property(const FinetunedModel &model, const Polymer &polymer) {
  Binding b(model.params);
  const double z = head_forward(b, represent(b, model.config, model.modality, polymer)).item();
  return model.target_mean + model.target_std * z;
}

std::vector<double> predict_properties(const FinetunedModel &model,
                                       std::span<const Polymer> polymers) {
  std::vector<double> out;
  out.reserve(polymers.size());
  for (const auto &p : polymers) out.push_back(predict_property(model, p));
  return out;
}

FinetunedModel train_regressor(std::span<const Polymer> polymers, std::span<const double> targets,
                               const ParamStore &pretrained, const ModelConfig &config,
                               Modality modality, const FinetuneConfig &ft) {
  ft.validate();
  if (polymers.size() != targets.size())
    throw Error(Errc::kShapeMismatch, "one target per polymer required");
  if (polymers.empty()) throw Error(Errc::kTooFewRecords, "empty training split");

  FinetunedModel model;
  model.config = config;
  model.modality = modality;
  const double n = static_cast<double>(targets.size());
  model.target_mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double var = 0.0;
  for (double t : targets) var += (t - model.target_mean) * (t - model.target_mean);
  model.target_std = std::sqrt(var / n);
  if (!(model.target_std > 0.0)) model.target_std = 1.0;

  std::vector<double> z(targets.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (targets[i] - model.target_mean) / model.target_std;

  // Only the encoders the modality reads, plus the head.
  if (uses_sequence(modality)) model.params.merge(pretrained, "seq.");
  if (uses_structure(modality)) model.params.merge(pretrained, "struct.");
  model.params.set_trainable("seq.", !ft.freeze_encoder);
  model.params.set_trainable("struct.", !ft.freeze_encoder);
  Rng head_rng(mix_seed(ft.seed, 31));
  init_head(model.params, representation_dim(config, modality), ft.head_hidden, head_rng);

  Adam adam(ft.adam);
  Rng order_rng(mix_seed(ft.seed, 32));
  std::vector<std::size_t> order(polymers.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < ft.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += ft.batch_size) {
      const std::size_t end = std::min(order.size(), start + ft.batch_size);
      Binding b(model.params);
      std::vector<ad::Var> rows;
      Tensor target = Tensor::matrix(end - start, 1);
      for (std::size_t i = start; i < end; ++i) {
        rows.push_back(head_forward(b, represent(b, config, modality, polymers[order[i]])));
        target[i - start] = z[order[i]];
      }
      ad::Var loss = ad::mse(ad::stack_rows(rows), target);
      ad::backward(loss);
      adam.step(model.params, b.gradients());
    }
  }
  return model;
}

EvalReport summarize(std::string modality, std::vector<FoldResult> folds) {
  EvalReport r;
  r.modality = std::move(modality);
  r.folds = std::move(folds);
  const double k = static_cast<double>(r.folds.size());
  if (r.folds.empty()) return r;
  for (const auto &f : r.folds) {
    r.rmse_mean += f.rmse / k;
    r.r2_mean += f.r2 / k;
  }
  if (r.folds.size() > 1) {
    for (const auto &f : r.folds) {
      r.rmse_std += (f.rmse - r.rmse_mean) * (f.rmse - r.rmse_mean);
      r.r2_std += (f.r2 - r.r2_mean) * (f.r2 - r.r2_mean);
    }
    r.rmse_std = std::sqrt(r.rmse_std / (k - 1.0));
    r.r2_std = std::sqrt(r.r2_std / (k - 1.0));
  }
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["modality"] = modality;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto &f : folds)
    j["folds"].push_back({{"fold", f.fold}, {"train", f.train_size}, {"test", f.test_size},
                          {"rmse", f.rmse}, {"r2", f.r2}});
  j["rmse"] = {{"mean", rmse_mean}, {"std", rmse_std}};
  j["r2"] = {{"mean", r2_mean}, {"std", r2_std}};
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %7s %7s %12s %12s\n", "fold", "train", "test", "RMSE", "R2");
  out << buf;
  for (const auto &f : folds) {
    std::snprintf(buf, sizeof buf, "%-6zu %7zu %7zu %12.6f %12.6f\n", f.fold, f.train_size,
                  f.test_size, f.rmse, f.r2);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean +- std (%s): RMSE %.6f +- %.6f, R2 %.6f +- %.6f\n",
                modality.c_str(), rmse_mean, rmse_std, r2_mean, r2_std);
  out << buf;
  return out.str();
}

EvalReport run_cross_validation(std::span<const Polymer> polymers, std::span<const double> targets,
                                const ParamStore &pretrained, const ModelConfig &config,
                                Modality modality, const FinetuneConfig &ft) {
  ft.validate();
  if (polymers.size() != targets.size())
    throw Error(Errc::kShapeMismatch, "one target per polymer required");
  const auto folds = kfold_partition(polymers.size(), ft.folds, ft.seed);
  if (uses_structure(modality))
    for (const auto &p : polymers)
      if (p.conformer.size() == 0)
        throw Error(Errc::kMissingConformer, "no conformer for '" + p.psmiles + "'");

  std::vector<FoldResult> results(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  const auto k = static_cast<std::ptrdiff_t>(folds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ff = 0; ff < k; ++ff) {
    const auto f = static_cast<std::size_t>(ff);
    try {
      std::vector<char> held(polymers.size(), 0);
      for (auto i : folds[f]) held[i] = 1;
      std::vector<Polymer> train, test;
      std::vector<double> y_train, y_test;
      for (std::size_t i = 0; i < polymers.size(); ++i) {
        (held[i] ? test : train).push_back(polymers[i]);
        (held[i] ? y_test : y_train).push_back(targets[i]);
      }
      FinetuneConfig fold_cfg = ft;
      fold_cfg.seed = mix_seed(ft.seed, 100 + f);
      const auto model = train_regressor(train, y_train, pretrained, config, modality, fold_cfg);
      const auto pred = predict_properties(model, test);
      results[f] = FoldResult{f, train.size(), test.size(), rmse(pred, y_test), r_squared(pred, y_test)};
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);
  return summarize(std::string(modality_name(modality)), std::move(results));
}

}  // namespace mmp
