// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/pretrain.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>

#include "mmpolymer/error.hpp"

namespace mmp {

namespace {

constexpr double kProjStd = 0.1;

std::vector<int> encode_polymer(const std::string &converted, const psmiles::Vocabulary &vocab,
                                const ModelConfig &config) {
  auto ids = psmiles::encode_ids(psmiles::tokenize(converted), vocab);
  if (ids.size() > config.seq.max_length)
    throw Error(Errc::kLengthExceeded, "'" + converted + "' has " + std::to_string(ids.size()) +
                                           " tokens, max_length is " +
                                           std::to_string(config.seq.max_length));
  return ids;
}

}  // namespace

void ModelConfig::validate() const {
  seq.validate();
  structure.validate();
  if (contrast_dim == 0) throw Error(Errc::kConfigError, "contrast_dim must be positive");
}

ParamStore init_model(const ModelConfig &config, std::uint64_t seed) {
  config.validate();
  ParamStore params;
  Rng seq_rng(mix_seed(seed, 1));
  Rng struct_rng(mix_seed(seed, 2));
  Rng proj_rng(mix_seed(seed, 3));
  init_seq_params(params, config.seq, seq_rng);
  init_struct_params(params, config.structure, struct_rng);
  params.add("contrast.proj1d", normal_tensor(config.seq.dim, config.contrast_dim, kProjStd, proj_rng));
  params.add("contrast.proj3d",
             normal_tensor(config.structure.atom_dim, config.contrast_dim, kProjStd, proj_rng));
  return params;
}

TaskToggles TaskToggles::parse(std::string_view list) {
  TaskToggles t{false, false, false};
  if (list == "none") return t;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start);
    if (item == "mlm")
      t.mlm = true;
    else if (item == "denoise")
      t.denoise = true;
    else if (item == "contrast")
      t.contrast = true;
    else
      throw Error(Errc::kConfigError, "unknown task '" + std::string(item) +
                                          "' (expected mlm, denoise, contrast or none)");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return t;
}

std::string TaskToggles::to_string() const {
  std::string out;
  auto add = [&](bool on, const char *name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(mlm, "mlm");
  add(denoise, "denoise");
  add(contrast, "contrast");
  return out.empty() ? "none" : out;
}

std::vector<TaskToggles> TaskToggles::all_combinations() {
  std::vector<TaskToggles> out;
  for (int mask = 7; mask >= 0; --mask)
    out.push_back(TaskToggles{(mask & 4) != 0, (mask & 2) != 0, (mask & 1) != 0});
  return out;
}

void PretrainConfig::validate() const {
  if (batch_size == 0) throw Error(Errc::kConfigError, "batch_size must be >= 1");
  if (!(tau > 0.0)) throw Error(Errc::kConfigError, "tau must be > 0");
  if (!(noise_scale >= 0.0)) throw Error(Errc::kConfigError, "noise_scale must be >= 0");
  if (!(masking.rate >= 0.0 && masking.rate <= 1.0))
    throw Error(Errc::kConfigError, "mask_rate must lie in [0, 1]");
  if (!(adam.lr > 0.0)) throw Error(Errc::kConfigError, "lr must be > 0");
}

std::vector<std::string> read_corpus(std::istream &in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::string> load_corpus(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open corpus " + path);
  return read_corpus(in);
}

psmiles::Vocabulary build_vocabulary(std::span<const std::string> corpus,
                                     psmiles::StarStrategy strategy) {
  std::vector<std::string> converted;
  converted.reserve(corpus.size());
  for (const auto &s : corpus) converted.push_back(psmiles::transform_stars(s, strategy));
  return psmiles::Vocabulary::build(converted);
}

std::vector<Polymer> prepare_polymers(std::span<const std::string> corpus,
                                      std::span<const Conformer> conformers,
                                      const psmiles::Vocabulary &vocab,
                                      psmiles::StarStrategy strategy, const ModelConfig &config) {
  std::map<std::string, const Conformer *, std::less<>> by_name;
  for (const auto &c : conformers) by_name.emplace(c.psmiles, &c);
  std::vector<Polymer> out;
  out.reserve(corpus.size());
  for (const auto &s : corpus) {
    const std::string converted = psmiles::transform_stars(s, strategy);
    auto it = by_name.find(converted);
    if (it == by_name.end()) it = by_name.find(s);
    if (it == by_name.end())
      throw Error(Errc::kDataMisaligned, "no conformer for '" + s + "'");
    out.push_back(Polymer{s, encode_polymer(converted, vocab, config),
                          add_virtual_atom(*it->second)});
  }
  return out;
}

std::vector<Polymer> prepare_polymers(std::span<const std::string> corpus,
                                      const psmiles::Vocabulary &vocab,
                                      psmiles::StarStrategy strategy, const ModelConfig &config) {
  std::vector<Polymer> out;
  out.reserve(corpus.size());
  for (const auto &s : corpus) {
    const std::string converted = psmiles::transform_stars(s, strategy);
    out.push_back(Polymer{s, encode_polymer(converted, vocab, config),
                          add_virtual_atom(chain_embed(converted))});
  }
  return out;
}

PretrainSample make_sample(const Polymer &polymer, const psmiles::Vocabulary &vocab,
                           const ModelConfig &model, const PretrainConfig &config,
                           TaskToggles toggles, Rng &rng) {
  PretrainSample s;
  if (toggles.mlm) {
    s.masked = psmiles::apply_masking(polymer.ids, vocab, config.masking, rng);
  } else {
    s.masked.input_ids = polymer.ids;
  }
  s.noisy = inject_noise(polymer.conformer, toggles.denoise ? config.noise_scale : 0.0, rng);
  s.input = make_struct_input(polymer.conformer.atoms, s.noisy.noisy, model.structure);
  return s;
}

ad::Var masked_prediction_loss(Binding &params, const SeqConfig &config,
                               std::span<const SeqOutput> encoded,
                               std::span<const psmiles::MaskedSequence> masks) {
  if (encoded.size() != masks.size())
    throw Error(Errc::kShapeMismatch, "one mask set per encoded sequence required");
  std::vector<ad::Var> terms;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].positions.empty()) continue;
    ad::Var probs = mlm_probabilities(params, config, encoded[i].tokens, masks[i].positions);
    terms.push_back(ad::cross_entropy(probs, masks[i].labels));
  }
  if (terms.empty()) return ad::Var::constant(Tensor::scalar(0.0));
  return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(terms.size()));
}

ad::Var coordinate_denoising_loss(Binding &params, const StructOutput &encoded,
                                  const NoisyConformer &noisy) {
  const Tensor noisy_coords = coords_tensor(noisy.noisy);
  ad::Var predicted = reconstruct_coordinates(params, encoded, noisy_coords);
  const std::size_t n = noisy.clean.size();
  auto include = std::make_unique<bool[]>(n);
  for (std::size_t i = 1; i < n; ++i) include[i] = true;  // row 0 is the virtual atom
  return ad::smooth_l1(predicted, coords_tensor(noisy.clean.coords),
                       std::span<const bool>(include.get(), n));
}

ad::Var info_nce(const ad::Var &z1, const ad::Var &z3, double tau) {
  const std::size_t k = z1.rows();
  ad::Var sims = ad::matmul(ad::l2_normalize_rows(z1), ad::transpose(ad::l2_normalize_rows(z3)));
  std::vector<int> labels(k);
  for (std::size_t i = 0; i < k; ++i) labels[i] = static_cast<int>(i);
  return ad::nll_rows(ad::log_softmax_rows(ad::scale(sims, 1.0 / tau)), labels);
}

ad::Var contrastive_alignment_loss(Binding &params, const ad::Var &x1d, const ad::Var &x3d,
                                   double tau) {
  return info_nce(ad::matmul(x1d, params["contrast.proj1d"]),
                  ad::matmul(x3d, params["contrast.proj3d"]), tau);
}

LossResult total_loss(Binding &params, const ModelConfig &config,
                      std::span<const PretrainSample> batch, TaskToggles toggles, double tau) {
  LossResult result;
  std::vector<ad::Var> terms;
  const bool need_seq = toggles.mlm || toggles.contrast;
  const bool need_struct = toggles.denoise || toggles.contrast;

  std::vector<SeqOutput> seq_out;
  std::vector<StructOutput> struct_out;
  if (need_seq)
    for (const auto &s : batch) seq_out.push_back(encode_sequence(params, config.seq, s.masked.input_ids));
  if (need_struct)
    for (const auto &s : batch) struct_out.push_back(encode_structure(params, config.structure, s.input));

  if (toggles.mlm) {
    std::vector<psmiles::MaskedSequence> masks;
    masks.reserve(batch.size());
    for (const auto &s : batch) masks.push_back(s.masked);
    ad::Var l = masked_prediction_loss(params, config.seq, seq_out, masks);
    result.parts.l_1d = l.item();
    terms.push_back(l);
  }
  if (toggles.denoise) {
    std::vector<ad::Var> per;
    for (std::size_t i = 0; i < batch.size(); ++i)
      per.push_back(coordinate_denoising_loss(params, struct_out[i], batch[i].noisy));
    ad::Var l = ad::scale(ad::add_n(per), 1.0 / static_cast<double>(per.size()));
    result.parts.l_3d = l.item();
    terms.push_back(l);
  }
  if (toggles.contrast) {
    std::vector<ad::Var> rows1, rows3;
    for (const auto &o : seq_out) rows1.push_back(o.pooled);
    for (const auto &o : struct_out) rows3.push_back(o.pooled);
    ad::Var l = contrastive_alignment_loss(params, ad::stack_rows(rows1), ad::stack_rows(rows3), tau);
    result.parts.l_contrast = l.item();
    terms.push_back(l);
  }
  result.total = terms.empty() ? ad::Var::constant(Tensor::scalar(0.0)) : ad::add_n(terms);
  result.parts.total = result.total.item();
  return result;
}

PretrainResult run_pretraining(std::span<const Polymer> polymers,
                               const psmiles::Vocabulary &vocab, const ModelConfig &model,
                               const PretrainConfig &config, TaskToggles toggles,
                               ParamStore initial, const ProgressFn &progress) {
  config.validate();
  model.validate();
  if (!toggles.any())
    throw Error(Errc::kConfigError, "at least one pretraining task must be enabled");
  if (polymers.empty() && config.steps > 0)
    throw Error(Errc::kTooFewRecords, "empty pretraining corpus");

  PretrainResult result;
  result.params = std::move(initial);
  Adam adam(config.adam);
  Rng order_rng(mix_seed(config.seed, 11));
  std::vector<std::size_t> order(polymers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t k = std::min(config.batch_size, polymers.size());
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < config.steps; ++step) {
    if (cursor + k > order.size()) {
      order_rng.shuffle(order);
      cursor = 0;
    }
    std::vector<PretrainSample> batch(k);
    const std::uint64_t batch_seed = mix_seed(config.seed, 1000 + step);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < k; ++i) {
      Rng rng(mix_seed(batch_seed, i));
      batch[i] = make_sample(polymers[order[cursor + i]], vocab, model, config, toggles, rng);
    }
    cursor += k;

    try {
      Binding binding(result.params);
      LossResult loss = total_loss(binding, model, batch, toggles, config.tau);
      ad::backward(loss.total);
      adam.step(result.params, binding.gradients());
      result.trace.push_back({step, loss.parts});
      if (progress) progress(result.trace.back());
    } catch (const Error &e) {
      if (e.code() == Errc::kNumericFailure || e.code() == Errc::kZeroVector)
        throw Error(e.code(), "step " + std::to_string(step) + ": " + e.what());
      throw;
    }
  }
  return result;
}

void write_trace_csv(std::ostream &out, std::span<const TraceRow> trace) {
  out << "step,l_1d,l_3d,l_contrast,total\n";
  char buf[160];
  for (const auto &r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.step, r.loss.l_1d,
                  r.loss.l_3d, r.loss.l_contrast, r.loss.total);
    out << buf;
  }
}

double trace_mean(std::span<const TraceRow> trace, std::size_t begin, std::size_t end,
                  double LossBreakdown::*component) {
  if (begin >= end || end > trace.size())
    throw Error(Errc::kConfigError, "empty or out-of-range trace window");
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += trace[i].loss.*component;
  return s / static_cast<double>(end - begin);
}

double retrieval_accuracy(const ParamStore &params, const ModelConfig &config,
                          std::span<const Polymer> polymers) {
  if (polymers.empty()) return 0.0;
  Binding b(params);
  std::vector<ad::Var> rows1, rows3;
  for (const auto &p : polymers) {
    rows1.push_back(encode_sequence(b, config.seq, p.ids).pooled);
    rows3.push_back(encode_structure(b, config.structure,
                                     make_struct_input(p.conformer, config.structure)).pooled);
  }
  ad::Var z1 = ad::l2_normalize_rows(ad::matmul(ad::stack_rows(rows1), b["contrast.proj1d"]));
  ad::Var z3 = ad::l2_normalize_rows(ad::matmul(ad::stack_rows(rows3), b["contrast.proj3d"]));
  const Tensor sims = ad::matmul(z1, ad::transpose(z3)).value();
  const std::size_t k = polymers.size();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (sims(i, j) > sims(i, best)) best = j;
    hits += best == i;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace mmp
