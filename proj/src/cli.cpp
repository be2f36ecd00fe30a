// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmpolymer/ablation.hpp"
#include "mmpolymer/checkpoint.hpp"
#include "mmpolymer/config.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/synthetic.hpp"

namespace mmp {

namespace {

struct Options {
  // global
  std::uint64_t seed = 0;
  bool quiet = false;
  bool seed_set = false;
  // shared by several subcommands
  std::string config_path, corpus, conformers, data, checkpoint, out, modality, tasks, strategy,
      trace, table, save_model, property;
  std::vector<std::string> datasets, settings;
  std::size_t folds = 0, count = 0;
  bool chain_embed = false, freeze = false, exotic = false;
  std::string text;  // positional P-SMILES
};

class Logger {
 public:
  Logger(std::ostream &err, bool quiet) : err_(err), quiet_(quiet) { }
  void operator()(const std::string &line) const {
    if (!quiet_) err_ << line << "\n";
  }

 private:
  std::ostream &err_;
  bool quiet_;
};

std::ofstream open_out(const std::string &path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::kIoError, "cannot write " + path);
  return f;
}

// Not every subcommand defines every flag.
bool given(const CLI::App &sub, const std::string &name) {
  const CLI::Option *opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// defaults < config file < --set < dedicated flags
RunConfig resolve_config(const CLI::App &sub, const Options &o, RunConfig base) {
  if (!o.config_path.empty()) base = load_config(o.config_path, std::move(base));
  for (const auto &kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(Errc::kConfigError, "--set expects key=value, got '" + kv + "'");
    apply_setting(base, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (given(sub, "--tasks")) apply_setting(base, "tasks", o.tasks);
  if (given(sub, "--strategy")) apply_setting(base, "strategy", o.strategy);
  if (given(sub, "--modality")) apply_setting(base, "modality", o.modality);
  if (given(sub, "--folds")) base.finetune.folds = o.folds;
  if (given(sub, "--freeze-encoder")) base.finetune.freeze_encoder = o.freeze;
  if (o.seed_set) base.seed = o.seed;
  base.sync_seed();
  base.validate();
  return base;
}

std::vector<Conformer> maybe_conformers(const std::string &path) {
  return path.empty() ? std::vector<Conformer>{} : load_conformers(path);
}

// Conformers are attached when given; missing ones are an error unless
// --chain-embed is set. Without a conformer file every layout is generated.
std::vector<Polymer> polymers_for(const std::vector<std::string> &names, const Options &o,
                                  const Checkpoint &ck, Modality modality) {
  const auto confs = maybe_conformers(o.conformers);
  const bool fill = o.chain_embed || o.conformers.empty();
  auto polymers = prepare_for_modality(names, confs, fill, ck.vocab, ck.config.strategy, ck.config.model);
  if (uses_structure(modality))
    for (const auto &p : polymers)
      if (p.conformer.size() == 0)
        throw Error(Errc::kMissingConformer, "no conformer for '" + p.psmiles + "' (try --chain-embed)");
  return polymers;
}

// psmiles,value CSV or a bare list of P-SMILES (optionally headed "psmiles").
void read_records(const std::string &path, std::vector<std::string> &names,
                  std::vector<std::string> &values) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path);
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first == "psmiles,value") {
    std::ifstream again(path);
    char buf[32];
    for (const auto &r : read_property_csv(again, path).records) {
      names.push_back(r.psmiles);
      std::snprintf(buf, sizeof buf, "%.17g", r.value);
      values.emplace_back(buf);
    }
    return;
  }
  std::stringstream rest;
  if (first != "psmiles") rest << first << "\n";
  rest << in.rdbuf();
  for (auto &s : read_corpus(rest)) {
    names.push_back(std::move(s));
    values.emplace_back();
  }
}

// Settings that come from the checkpoint, with the file and flags applied on
// top; architecture keys must agree with what was stored.
RunConfig config_over_checkpoint(const CLI::App &sub, const Options &o, const std::string &ck_path,
                                 Checkpoint &ck) {
  ck = load_checkpoint(ck_path);
  RunConfig cfg = resolve_config(sub, o, ck.config);
  cfg.model.seq.vocab_size = ck.vocab.size();
  check_architecture(ck, cfg.model);
  if (cfg.strategy != ck.config.strategy)
    throw Error(Errc::kVersionMismatch, "checkpoint was built with strategy '" +
                                            std::string(psmiles::strategy_name(ck.config.strategy)) + "'");
  ck.config = cfg;
  return cfg;
}

int cmd_tokenize(const Options &o, std::ostream &out) {
  const auto seq = psmiles::tokenize(o.text);
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) out << (i ? " " : "") << seq.tokens[i];
  out << "\n";
  return kExitOk;
}

int cmd_star_sub(const Options &o, std::ostream &out) {
  out << psmiles::transform_stars(o.text, psmiles::parse_strategy(o.strategy)) << "\n";
  return kExitOk;
}

int cmd_synth(const Options &o, std::ostream &out) {
  Rng rng(o.seed);
  SyntheticOptions so;
  so.exotic_tokens = o.exotic;
  const auto items = synthetic_psmiles(o.count, rng, so);
  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream &dst = o.out.empty() ? out : file;
  if (o.property.empty()) {
    for (const auto &s : items) dst << s << "\n";
    return kExitOk;
  }
  PropertyDataset ds;
  for (const auto &s : items) ds.records.push_back({s, synthetic_property(o.property, s)});
  write_property_csv(dst, ds);
  return kExitOk;
}

int cmd_pretrain(const CLI::App &sub, const Options &o, const Logger &log) {
  RunConfig cfg = resolve_config(sub, o, RunConfig{});
  const auto corpus = load_corpus(o.corpus);
  const auto vocab = build_vocabulary(corpus, cfg.strategy);
  cfg.model.seq.vocab_size = vocab.size();
  cfg.model.validate();
  std::vector<Polymer> polymers;
  if (o.conformers.empty()) {
    log("pretrain: no --conformers given, using chain_embed layouts");
    polymers = prepare_polymers(corpus, vocab, cfg.strategy, cfg.model);
  } else if (o.chain_embed) {
    polymers = prepare_for_modality(corpus, load_conformers(o.conformers), true, vocab, cfg.strategy, cfg.model);
  } else {
    polymers = prepare_polymers(corpus, load_conformers(o.conformers), vocab, cfg.strategy, cfg.model);
  }
  log("pretrain: " + std::to_string(polymers.size()) + " polymers, vocabulary " +
      std::to_string(vocab.size()) + ", tasks " + cfg.tasks.to_string());
  const auto result = run_pretraining(
      polymers, vocab, cfg.model, cfg.pretrain, cfg.tasks, init_model(cfg.model, cfg.seed),
      [&](const TraceRow &r) {
        if (r.step % 10 != 0 && r.step + 1 != cfg.pretrain.steps) return;
        char buf[160];
        std::snprintf(buf, sizeof buf, "step %zu l_1d=%.6f l_3d=%.6f l_contrast=%.6f total=%.6f",
                      r.step, r.loss.l_1d, r.loss.l_3d, r.loss.l_contrast, r.loss.total);
        log(buf);
      });
  Checkpoint ck{cfg, vocab, result.params, std::nullopt};
  save_checkpoint(o.out, ck);
  if (!o.trace.empty()) {
    auto f = open_out(o.trace);
    write_trace_csv(f, result.trace);
  }
  log("pretrain: wrote " + o.out);
  return kExitOk;
}

int cmd_finetune(const CLI::App &sub, const Options &o, std::ostream &out, const Logger &log) {
  Checkpoint ck;
  const RunConfig cfg = config_over_checkpoint(sub, o, o.checkpoint, ck);
  const auto ds = load_property_csv(o.data);
  if (ds.records.size() < cfg.finetune.folds)
    throw Error(Errc::kTooFewRecords, std::to_string(ds.records.size()) + " records for " +
                                          std::to_string(cfg.finetune.folds) + " folds");
  const auto polymers = polymers_for(ds.psmiles(), o, ck, cfg.modality);
  const auto targets = ds.values();
  log("finetune: " + std::to_string(polymers.size()) + " records, " +
      std::to_string(cfg.finetune.folds) + " folds, modality " + std::string(modality_name(cfg.modality)));
  const auto report = run_cross_validation(polymers, targets, ck.params, cfg.model, cfg.modality, cfg.finetune);
  if (!o.out.empty()) {
    auto f = open_out(o.out);
    f << report.to_json();
  }
  out << report.to_table();
  if (!o.save_model.empty()) {
    const auto model = train_regressor(polymers, targets, ck.params, cfg.model, cfg.modality, cfg.finetune);
    Checkpoint tuned{cfg, ck.vocab, model.params,
                     HeadInfo{cfg.modality, model.target_mean, model.target_std}};
    save_checkpoint(o.save_model, tuned);
    log("finetune: wrote model " + o.save_model);
  }
  return kExitOk;
}

int cmd_evaluate(const CLI::App &sub, const Options &o, std::ostream &out, const Logger &log) {
  Checkpoint ck;
  RunConfig cfg = config_over_checkpoint(sub, o, o.checkpoint, ck);
  const auto ds = load_property_csv(o.data);
  if (!ck.head) {
    log("evaluate: checkpoint has no regression head, running cross-validation");
    const auto polymers = polymers_for(ds.psmiles(), o, ck, cfg.modality);
    out << run_cross_validation(polymers, ds.values(), ck.params, cfg.model, cfg.modality, cfg.finetune)
               .to_table();
    return kExitOk;
  }
  if (given(sub, "--modality") && cfg.modality != ck.head->modality)
    throw Error(Errc::kConfigError, "head was trained on modality " +
                                        std::string(modality_name(ck.head->modality)));
  const auto model = to_finetuned(ck);
  const auto polymers = polymers_for(ds.psmiles(), o, ck, model.modality);
  const auto pred = predict_properties(model, polymers);
  const auto targets = ds.values();
  char buf[160];
  std::snprintf(buf, sizeof buf, "records %zu modality %s rmse %.6f r2 %.6f\n", pred.size(),
                std::string(modality_name(model.modality)).c_str(), rmse(pred, targets),
                r_squared(pred, targets));
  out << buf;
  return kExitOk;
}

int cmd_embed(const CLI::App &sub, const Options &o, const Logger &log) {
  Checkpoint ck;
  const RunConfig cfg = config_over_checkpoint(sub, o, o.checkpoint, ck);
  std::vector<std::string> names, values;
  read_records(o.data, names, values);
  const auto polymers = polymers_for(names, o, ck, cfg.modality);
  auto f = open_out(o.out);
  export_embeddings(f, polymers, values, ck.params, cfg.model, cfg.modality);
  log("embed: wrote " + std::to_string(polymers.size()) + " rows to " + o.out);
  return kExitOk;
}

int cmd_ablate(const CLI::App &sub, const Options &o, std::ostream &out, const Logger &log) {
  const RunConfig cfg = resolve_config(sub, o, RunConfig{});
  AblationInputs inputs;
  inputs.corpus = load_corpus(o.corpus);
  inputs.conformers = maybe_conformers(o.conformers);
  for (const auto &path : o.datasets) {
    auto ds = load_property_csv(path);
    const auto slash = path.find_last_of('/');
    ds.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (ds.name.size() > 4 && ds.name.ends_with(".csv")) ds.name.resize(ds.name.size() - 4);
    inputs.datasets.push_back(std::move(ds));
  }
  const auto report = run_ablation(inputs, cfg, [&](const std::string &s) { log(s); });
  if (!o.out.empty()) {
    auto f = open_out(o.out);
    f << report.to_json();
  }
  if (!o.table.empty()) {
    auto f = open_out(o.table);
    f << report.to_table();
  }
  out << report.to_table();
  return kExitOk;
}

}  // namespace

void export_embeddings(std::ostream &out, std::span<const Polymer> polymers,
                       std::span<const std::string> values, const ParamStore &params,
                       const ModelConfig &config, Modality modality) {
  if (values.size() != polymers.size())
    throw Error(Errc::kShapeMismatch, "one value slot per polymer required");
  const std::size_t d = representation_dim(config, modality);
  out << "psmiles,value";
  for (std::size_t c = 0; c < d; ++c) out << ",e" << c;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < polymers.size(); ++i) {
    Binding b(params);
    const Tensor e = represent(b, config, modality, polymers[i]).value();
    out << polymers[i].psmiles << ',' << values[i];
    for (std::size_t c = 0; c < d; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", e[c]);
      out << buf;
    }
    out << "\n";
  }
}

int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  Options o;
  CLI::App app{"MMPolymer: multimodal polymer pretraining and property regression", "mmpolymer"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.add_option("--seed", o.seed, "random seed");
  app.add_flag("--quiet", o.quiet, "suppress progress output");

  auto add_config = [&](CLI::App *s) {
    s->add_option("--config", o.config_path, "flat JSON configuration file");
    s->add_option("--set", o.settings, "override one config key (key=value)");
  };
  auto add_structures = [&](CLI::App *s) {
    s->add_option("--conformers", o.conformers, "conformer JSONL file");
    s->add_flag("--chain-embed", o.chain_embed, "generate layouts for polymers without a conformer");
  };

  auto *tok = app.add_subcommand("tokenize", "print the token sequence of a P-SMILES");
  tok->add_option("psmiles", o.text)->required();

  auto *star = app.add_subcommand("star-sub", "rewrite the `*` atoms of a P-SMILES");
  star->add_option("--strategy", o.strategy, "keep, remove or substitute")->required();
  star->add_option("psmiles", o.text)->required();

  auto *synth = app.add_subcommand("synth", "generate a synthetic corpus or property dataset");
  synth->add_option("--count", o.count, "number of polymers")->required();
  synth->add_option("--property", o.property, "heavy_atoms or heteroatoms: write psmiles,value CSV");
  synth->add_flag("--exotic", o.exotic, "include bracket atoms, bond symbols and %nn ring labels");
  synth->add_option("--out", o.out, "output file (default standard output)");

  auto *pre = app.add_subcommand("pretrain", "multitask pretraining");
  add_config(pre);
  pre->add_option("--corpus", o.corpus, "P-SMILES corpus, one per line")->required();
  add_structures(pre);
  pre->add_option("--tasks", o.tasks, "mlm,denoise,contrast subset");
  pre->add_option("--strategy", o.strategy, "star strategy");
  pre->add_option("--trace", o.trace, "loss trace CSV");
  pre->add_option("--out", o.out, "checkpoint path")->required();

  auto *fine = app.add_subcommand("finetune", "k-fold cross-validated property regression");
  add_config(fine);
  fine->add_option("--data", o.data, "psmiles,value CSV")->required();
  fine->add_option("--checkpoint", o.checkpoint, "pretrained checkpoint")->required();
  add_structures(fine);
  fine->add_option("--modality", o.modality, "1d, 3d or both");
  fine->add_option("--folds", o.folds, "number of folds");
  fine->add_flag("--freeze-encoder", o.freeze, "train the head only");
  fine->add_option("--out", o.out, "JSON report path");
  fine->add_option("--save-model", o.save_model, "also train on all records and save the model");

  auto *eval = app.add_subcommand("evaluate", "score a dataset with a checkpoint");
  add_config(eval);
  eval->add_option("--data", o.data, "psmiles,value CSV")->required();
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint")->required();
  add_structures(eval);
  eval->add_option("--modality", o.modality, "1d, 3d or both");

  auto *emb = app.add_subcommand("embed", "export pooled embeddings as CSV");
  add_config(emb);
  emb->add_option("--data", o.data, "CSV or P-SMILES list")->required();
  emb->add_option("--checkpoint", o.checkpoint, "checkpoint")->required();
  add_structures(emb);
  emb->add_option("--modality", o.modality, "1d, 3d or both");
  emb->add_option("--out", o.out, "output CSV")->required();

  auto *abl = app.add_subcommand("ablate", "pretraining-task and star-strategy ablations");
  add_config(abl);
  abl->add_option("--corpus", o.corpus, "pretraining corpus")->required();
  add_structures(abl);
  abl->add_option("--data", o.datasets, "psmiles,value CSV (repeatable)")->required();
  abl->add_option("--modality", o.modality, "1d, 3d or both");
  abl->add_option("--strategy", o.strategy, "strategy of the task table");
  abl->add_option("--folds", o.folds, "number of folds");
  abl->add_option("--out", o.out, "JSON report path");
  abl->add_option("--table", o.table, "text table path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    o.seed_set = app.count("--seed") > 0;
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const Logger log(err, o.quiet);
  try {
    if (*tok) return cmd_tokenize(o, out);
    if (*star) return cmd_star_sub(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*pre) return cmd_pretrain(*pre, o, log);
    if (*fine) return cmd_finetune(*fine, o, out, log);
    if (*eval) return cmd_evaluate(*eval, o, out, log);
    if (*emb) return cmd_embed(*emb, o, log);
    if (*abl) return cmd_ablate(*abl, o, out, log);
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    switch (error_class(e.code())) {
      case ErrorClass::kUsage: return kExitUsage;
      case ErrorClass::kNumeric: return kExitNumeric;
      case ErrorClass::kData: return kExitData;
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace mmp
