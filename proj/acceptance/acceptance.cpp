// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [--only A6] [--workdir DIR]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmpolymer/ablation.hpp"
#include "mmpolymer/checkpoint.hpp"
#include "mmpolymer/config.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/gradcheck.hpp"
#include "mmpolymer/synthetic.hpp"
#include "test_util.hpp"

namespace mmp {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string &s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char *f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Context {
  fs::path workdir;
  fs::path source = MMP_SOURCE_DIR;
  std::string cli = MMP_CLI_PATH;

  fs::path a6_checkpoint() const { return workdir / "a6_checkpoint.mmp"; }
  RunConfig desk_config() const { return load_config((source / "configs" / "desk.json").string()); }
};

// ---------------------------------------------------------------- A1 ----
Outcome a1(const Context &) {
  Outcome o;
  const std::pair<const char *, const char *> goldens[] = {
      {"*NCCCCCC(*)=O", "CNCCCCCC(N)=O"},
      {"*Oc1ccc(CC(*)=O)cc1", "COc1ccc(CC(O)=O)cc1"},
  };
  for (const auto &[in, want] : goldens) {
    const auto got = psmiles::transform_stars(in, psmiles::StarStrategy::kSubstitute);
    o.require(got == want, std::string(in) + " -> " + got + " (want " + want + ")");
  }
  o.note("2 goldens");
  return o;
}

// ---------------------------------------------------------------- A2 ----
Outcome a2(const Context &) {
  Outcome o;
  const std::vector<std::string> want{"[CLS]", "*", "C", "C", "(", "*", ")", "F", "[SEP]"};
  o.require(psmiles::tokenize("*CC(*)F").tokens == want, "*CC(*)F token list");
  Rng rng(2024);
  SyntheticOptions so;
  so.exotic_tokens = true;
  const auto corpus = synthetic_psmiles(1000, rng, so);
  std::size_t ok = 0;
  for (const auto &s : corpus) ok += psmiles::detokenize(psmiles::tokenize(s)) == s;
  o.require(ok == corpus.size(), fmt("round trip %zu/%zu", ok, corpus.size()));
  o.note(fmt("round trip %zu/%zu", ok, corpus.size()));
  return o;
}

// ---------------------------------------------------------------- A3 ----
double max_abs_diff(const Tensor &a, const Tensor &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Outcome a3(const Context &ctx) {
  Outcome o;
  const StructConfig cfg = ctx.desk_config().model.structure;
  ParamStore params;
  Rng init(3);
  init_struct_params(params, cfg, init);
  // Non-zero decoder output so equivariance is not trivially the identity.
  for (const auto &name : params.names())
    if (name.starts_with("denoise.psi"))
      for (double &x : params.mutable_value(name).values()) x = 0.3 * init.normal();
  Binding b(params);
  Rng rng(33);
  double worst_inv = 0.0, worst_eq = 0.0, moved = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 2 + rng.index(11);  // 2..12 real atoms
    const auto conf = add_virtual_atom(testing::random_conformer(n, rng));
    const auto base_in = make_struct_input(conf, cfg);
    const auto base = encode_structure(b, cfg, base_in);
    // a noisy copy for the decoder
    Rng nrng(mix_seed(33, c));
    const auto noisy = inject_noise(conf, 1.0, nrng);
    const auto noisy_in = make_struct_input(noisy.noisy_conformer(), cfg);
    const auto noisy_enc = encode_structure(b, cfg, noisy_in);
    const Tensor p_hat = reconstruct_coordinates(b, noisy_enc, coords_tensor(noisy.noisy)).value();
    moved = std::max(moved, max_abs_diff(p_hat, coords_tensor(noisy.noisy)));
    for (int m = 0; m < 20; ++m) {
      const auto r = testing::random_rotation(rng);
      const Vec3 t{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
      const auto moved_coords = testing::transform(r, t, conf.coords);
      const auto enc = encode_structure(b, cfg, make_struct_input(conf.atoms, moved_coords, cfg));
      worst_inv = std::max(worst_inv, max_abs_diff(enc.pooled.value(), base.pooled.value()));
      worst_inv = std::max(worst_inv, max_abs_diff(enc.atoms.value(), base.atoms.value()));

      const auto moved_noisy = testing::transform(r, t, noisy.noisy);
      const auto enc_n = encode_structure(b, cfg, make_struct_input(conf.atoms, moved_noisy, cfg));
      const Tensor got = reconstruct_coordinates(b, enc_n, coords_tensor(moved_noisy)).value();
      std::vector<Vec3> p_hat_rows(p_hat.rows());
      for (std::size_t i = 0; i < p_hat.rows(); ++i) p_hat_rows[i] = {p_hat(i, 0), p_hat(i, 1), p_hat(i, 2)};
      worst_eq = std::max(worst_eq, max_abs_diff(got, coords_tensor(testing::transform(r, t, p_hat_rows))));
    }
  }
  o.require(worst_inv <= 1e-8, fmt("invariance %.3g > 1e-8", worst_inv));
  o.require(worst_eq <= 1e-8, fmt("equivariance %.3g > 1e-8", worst_eq));
  o.require(moved > 1e-3, "decoder output equals its input");
  o.note(fmt("max |dX_3d| %.3g, max equivariance error %.3g over 1000 motions", worst_inv, worst_eq));
  return o;
}

// ---------------------------------------------------------------- A4 ----
ad::Var project(const ad::Var &x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(x, ad::Var::constant(normal_tensor(x.rows(), x.cols(), 1.0, rng))));
}

ModelConfig tiny_model(std::size_t vocab) {
  ModelConfig m;
  m.seq.dim = 8;
  m.seq.layers = 1;
  m.seq.heads = 2;
  m.seq.ff_dim = 16;
  m.seq.max_length = 64;
  m.seq.vocab_size = vocab;
  m.structure.atom_dim = 8;
  m.structure.pair_dim = 2;
  m.structure.layers = 1;
  m.structure.ff_dim = 16;
  m.contrast_dim = 4;
  return m;
}

struct TinySetup {
  std::vector<std::string> corpus;
  psmiles::Vocabulary vocab;
  ModelConfig model;
  std::vector<Polymer> polymers;

  explicit TinySetup(std::size_t n) {
    Rng rng(41);
    SyntheticOptions so;
    so.max_motifs = 2;
    corpus = synthetic_psmiles(n, rng, so);
    vocab = build_vocabulary(corpus, psmiles::StarStrategy::kSubstitute);
    model = tiny_model(vocab.size());
    polymers = prepare_polymers(corpus, vocab, psmiles::StarStrategy::kSubstitute, model);
  }

  std::vector<PretrainSample> batch(TaskToggles t, std::size_t k) const {
    PretrainConfig pc;
    std::vector<PretrainSample> out;
    for (std::size_t i = 0; i < k; ++i) {
      Rng rng(mix_seed(77, i));
      out.push_back(make_sample(polymers[i], vocab, model, pc, t, rng));
    }
    return out;
  }
};

Outcome a4(const Context &) {
  Outcome o;
  using ad::Var;
  Rng rng(21);
  ParamStore p;
  p.add("a", normal_tensor(4, 5, 1.0, rng));
  p.add("b", normal_tensor(5, 3, 1.0, rng));
  p.add("c", normal_tensor(4, 5, 1.0, rng));
  p.add("g", normal_tensor(1, 5, 1.0, rng));
  p.add("bias", normal_tensor(1, 5, 1.0, rng));
  const std::vector<int> ids{3, 0, 3, 1}, labels{0, 4, 2, 2};
  const std::vector<std::size_t> rows{2, 0, 2};
  const Tensor target = normal_tensor(4, 5, 1.5, rng);
  const bool inc[4] = {true, false, true, true};

  std::vector<std::pair<std::string, LossFunction>> prims{
      {"add/sub/mul", [](Binding &b) { return project(ad::mul(b["a"], b["c"]) - b["c"], 1); }},
      {"add_row", [](Binding &b) { return project(ad::add_row(b["a"], b["bias"]), 2); }},
      {"add_n/scale", [](Binding &b) {
         const Var t[] = {b["a"], b["c"], ad::scale(b["a"], 2.0)};
         return project(ad::add_n(t), 3);
       }},
      {"matmul", [](Binding &b) { return project(ad::matmul(b["a"], b["b"]), 4); }},
      {"transpose", [](Binding &b) { return project(ad::matmul(ad::transpose(b["b"]), ad::transpose(b["a"])), 5); }},
      {"gelu", [](Binding &b) { return project(ad::gelu(b["a"]), 6); }},
      {"softmax", [](Binding &b) { return project(ad::softmax_rows(b["a"]), 7); }},
      {"log_softmax", [](Binding &b) { return project(ad::log_softmax_rows(b["a"]), 8); }},
      {"layer_norm", [](Binding &b) { return project(ad::layer_norm(b["a"], b["g"], b["bias"]), 9); }},
      {"l2_normalize", [](Binding &b) { return project(ad::l2_normalize_rows(b["a"]), 10); }},
      {"embedding", [&](Binding &b) { return project(ad::embedding(b["a"], ids), 11); }},
      {"gather_rows", [&](Binding &b) { return project(ad::gather_rows(b["a"], rows), 12); }},
      {"row/stack/concat/slice", [](Binding &b) {
         const Var parts[] = {ad::row(b["a"], 1), ad::row(b["c"], 3)};
         const Var cols[] = {ad::stack_rows(parts), ad::slice_cols(ad::stack_rows(parts), 1, 2)};
         return project(ad::concat_cols(cols), 13);
       }},
      {"cross_entropy", [&](Binding &b) { return ad::cross_entropy(ad::softmax_rows(b["a"]), labels); }},
      {"nll_rows", [&](Binding &b) { return ad::nll_rows(ad::log_softmax_rows(b["a"]), labels); }},
      {"smooth_l1", [&](Binding &b) { return ad::smooth_l1(b["a"], target, inc); }},
      {"mse", [&](Binding &b) { return ad::mse(b["a"], target); }},
      {"cosine", [](Binding &b) { return ad::cosine_similarity(ad::row(b["a"], 0), ad::row(b["c"], 1)); }},
      {"sum/mean", [](Binding &b) { return ad::add(ad::mean(ad::mul(b["a"], b["a"])), ad::sum(b["c"])); }},
  };

  double worst = 0.0;
  std::size_t coords = 0;
  auto check = [&](const std::string &name, const LossFunction &f, ParamStore &store) {
    const auto r = grad_check(f, store, GradCheckOptions{});
    worst = std::max(worst, r.max_rel_error);
    coords += r.entries.size();
    o.require(r.passed, name + fmt(" rel err %.3g", r.max_rel_error));
  };
  for (const auto &[name, f] : prims) check(name, f, p);

  // attention
  ParamStore att;
  const std::size_t n = 4, heads = 2, width = 6;
  att.add("q", normal_tensor(n, width, 1.0, rng));
  att.add("k", normal_tensor(n, width, 1.0, rng));
  att.add("v", normal_tensor(n, width, 1.0, rng));
  att.add("bias", normal_tensor(n * n, heads, 1.0, rng));
  check("attention_scores/attend", [&](Binding &b) {
    const Var s = ad::attention_scores(b["q"], b["k"], heads, 0.7, b["bias"]);
    return project(ad::attend(s, b["v"], heads), 14) + project(s, 15);
  }, att);

  // Gaussian pair basis and pairwise displacement
  ParamStore geo;
  const std::size_t m = 3, types = 2, ch = 3;
  Tensor dist = Tensor::matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) dist(i, j) = dist(j, i) = rng.uniform(0.5, 4.0);
  std::vector<std::int32_t> pt;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) pt.push_back(static_cast<std::int32_t>((i % 2) * types + j % 2));
  geo.add("v", Tensor::matrix(types * types, ch, 1.0));
  geo.add("u", normal_tensor(types * types, ch, 0.1, rng));
  geo.add("mu", Tensor({1, ch}, std::vector<double>{0.5, 2.0, 3.5}));
  geo.add("sigma", Tensor({1, ch}, std::vector<double>{1.0, 0.7, 1.3}));
  geo.add("w", normal_tensor(m * m, 1, 1.0, rng));
  const Tensor xyz = normal_tensor(m, 3, 1.0, rng);
  check("gaussian_pair", [&](Binding &b) {
    return project(ad::gaussian_pair(dist, pt, b["v"], b["u"], b["mu"], b["sigma"], 1e-2), 16);
  }, geo);
  check("pair_displacement", [&](Binding &b) { return project(ad::pair_displacement(b["w"], xyz), 17); }, geo);
  const std::size_t prim_coords = coords;

  // end-to-end total loss, all tasks on
  const TinySetup s(8);
  auto params = init_model(s.model, 5);
  const TaskToggles all;
  const auto batch = s.batch(all, 4);
  GradCheckOptions opt;
  opt.samples = 200;
  opt.seed = 7;
  const auto total = grad_check(
      [&](Binding &b) { return total_loss(b, s.model, batch, all, 0.1).total; }, params, opt);
  worst = std::max(worst, total.max_rel_error);
  o.require(total.passed, fmt("total loss rel err %.3g", total.max_rel_error));
  o.require(total.entries.size() >= 100, fmt("only %zu sampled coordinates", total.entries.size()));
  o.note(fmt("%zu primitive checks over %zu coordinates, total loss over %zu sampled coordinates, "
             "max rel err %.3g",
             prims.size() + 3, prim_coords, total.entries.size(), worst));
  return o;
}

// ---------------------------------------------------------------- A5 ----
Outcome a5(const Context &) {
  Outcome o;
  const TinySetup s(8);
  const auto params = init_model(s.model, 3);
  double add_err = 0.0;
  for (const auto &t : TaskToggles::all_combinations()) {
    if (!t.any()) continue;
    const auto batch = s.batch(t, 4);
    Binding b(params);
    const auto r = total_loss(b, s.model, batch, t, 0.1);
    add_err = std::max(add_err, std::abs(r.total.item() - (r.parts.l_1d + r.parts.l_3d + r.parts.l_contrast)));
  }
  o.require(add_err <= 1e-12, fmt("additivity %.3g", add_err));

  Rng rng(5);
  const double k1 = info_nce(ad::Var::constant(normal_tensor(1, 6, 1.0, rng)),
                             ad::Var::constant(normal_tensor(1, 6, 1.0, rng)), 0.1)
                        .item();
  o.require(std::abs(k1) <= 1e-10, fmt("InfoNCE K=1 gives %.3g", k1));
  double eq_err = 0.0;
  for (std::size_t k : {2u, 8u, 32u}) {
    Tensor x = Tensor::matrix(k, 4), y = Tensor::matrix(k, 4);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < 4; ++c) {
        x(i, c) = 0.25 + static_cast<double>(c);
        y(i, c) = 1.5 - 0.3 * static_cast<double>(c);
      }
    const double l = info_nce(ad::Var::constant(x), ad::Var::constant(y), 0.07).item();
    eq_err = std::max(eq_err, std::abs(l - std::log(static_cast<double>(k))));
  }
  o.require(eq_err <= 1e-10, fmt("InfoNCE equal similarities off by %.3g", eq_err));

  // uniform prediction over the vocabulary through the masked-token head
  auto zeroed = params;
  zeroed.set("mlm.w", Tensor::matrix(s.model.seq.dim, s.vocab.size()));
  zeroed.set("mlm.b", Tensor::matrix(1, s.vocab.size()));
  Binding zb(zeroed);
  const auto enc = encode_sequence(zb, s.model.seq, s.polymers[0].ids);
  const std::vector<std::size_t> pos{1, 2};
  const std::vector<int> labels{s.polymers[0].ids[1], s.polymers[0].ids[2]};
  const double ce = ad::cross_entropy(mlm_probabilities(zb, s.model.seq, enc.tokens, pos), labels).item();
  const double ce_err = std::abs(ce - std::log(static_cast<double>(s.vocab.size())));
  o.require(ce_err <= 1e-10, fmt("uniform cross-entropy off by %.3g", ce_err));

  // smooth-L1 on either side of |e| = 1
  auto sl1 = [](double e) {
    const bool inc[1] = {true};
    return ad::smooth_l1(ad::Var::constant(Tensor::scalar(e)), Tensor::scalar(0.0), inc).item();
  };
  double cont = std::abs(sl1(1.0) - 0.5);
  for (double sign : {1.0, -1.0}) {
    const double below = sl1(sign * std::nextafter(1.0, 0.0)), above = sl1(sign * std::nextafter(1.0, 2.0));
    cont = std::max({cont, std::abs(below - 0.5), std::abs(above - 0.5)});
  }
  o.require(cont <= 1e-12, fmt("smooth-L1 jump %.3g", cont));
  o.note(fmt("additivity %.2g, InfoNCE K=1 %.2g, ln K err %.2g, CE err %.2g, smooth-L1 gap %.2g", add_err,
             std::abs(k1), eq_err, ce_err, cont));
  return o;
}

// ---------------------------------------------------------------- A6 ----
struct A6Data {
  std::vector<std::string> train, held;
};

A6Data a6_data() {
  Rng rng(7);
  auto all = synthetic_psmiles(232, rng);
  return {{all.begin(), all.begin() + 200}, {all.begin() + 200, all.end()}};
}

// Pretrains on the A6 corpus and saves the checkpoint; returns the result.
PretrainResult a6_pretrain(const Context &ctx, RunConfig &cfg, psmiles::Vocabulary &vocab,
                           const A6Data &data, bool verbose) {
  vocab = build_vocabulary(data.train, cfg.strategy);
  cfg.model.seq.vocab_size = vocab.size();
  const auto polymers = prepare_polymers(data.train, vocab, cfg.strategy, cfg.model);
  auto result = run_pretraining(polymers, vocab, cfg.model, cfg.pretrain, cfg.tasks,
                                init_model(cfg.model, cfg.seed), [&](const TraceRow &r) {
                                  if (verbose && r.step % 50 == 0)
                                    std::cerr << fmt("  step %zu l_1d %.4f l_3d %.4f l_contrast %.4f\n", r.step,
                                                     r.loss.l_1d, r.loss.l_3d, r.loss.l_contrast);
                                });
  save_checkpoint(ctx.a6_checkpoint().string(), Checkpoint{cfg, vocab, result.params, std::nullopt});
  std::ofstream trace(ctx.workdir / "a6_trace.csv");
  write_trace_csv(trace, result.trace);
  return result;
}

Outcome a6(const Context &ctx) {
  Outcome o;
  RunConfig cfg = ctx.desk_config();
  const auto data = a6_data();
  psmiles::Vocabulary vocab;
  const auto result = a6_pretrain(ctx, cfg, vocab, data, true);
  const auto &tr = result.trace;
  const std::size_t n = tr.size();
  const std::pair<const char *, double LossBreakdown::*> parts[] = {
      {"l_1d", &LossBreakdown::l_1d}, {"l_3d", &LossBreakdown::l_3d}, {"l_contrast", &LossBreakdown::l_contrast}};
  const bool enabled[] = {cfg.tasks.mlm, cfg.tasks.denoise, cfg.tasks.contrast};
  for (int i = 0; i < 3; ++i) {
    if (!enabled[i]) continue;
    const double lead = trace_mean(tr, 0, 20, parts[i].second), trail = trace_mean(tr, n - 20, n, parts[i].second);
    const double ratio = trail / lead;
    o.note(fmt("%s %.4f -> %.4f (ratio %.3f)", parts[i].first, lead, trail, ratio));
    o.require(ratio <= 0.7, fmt("%s ratio %.3f > 0.70", parts[i].first, ratio));
  }
  const auto held = prepare_polymers(data.held, vocab, cfg.strategy, cfg.model);
  const double acc = retrieval_accuracy(result.params, cfg.model, held);
  o.note(fmt("held-out retrieval %.3f (%zu polymers)", acc, held.size()));
  o.require(acc >= 0.8, fmt("retrieval %.3f < 0.80", acc));
  return o;
}

// ---------------------------------------------------------------- A7 ----
Outcome a7(const Context &ctx) {
  Outcome o;
  Checkpoint ck;
  if (fs::exists(ctx.a6_checkpoint())) {
    ck = load_checkpoint(ctx.a6_checkpoint().string());
    o.note("reused A6 checkpoint");
  } else {
    RunConfig cfg = ctx.desk_config();
    psmiles::Vocabulary vocab;
    const auto result = a6_pretrain(ctx, cfg, vocab, a6_data(), false);
    ck = Checkpoint{cfg, vocab, result.params, std::nullopt};
    o.note("pretrained the A6 checkpoint");
  }
  const RunConfig &cfg = ck.config;
  Rng rng(8);
  const auto names = synthetic_psmiles(200, rng);
  std::vector<double> y;
  for (const auto &s : names) y.push_back(heavy_atom_count(s));
  const std::vector<Conformer> none;
  const auto polymers = prepare_for_modality(names, none, true, ck.vocab, cfg.strategy, cfg.model);
  const auto report = run_cross_validation(polymers, y, ck.params, cfg.model, cfg.modality, cfg.finetune);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(y.size()));
  o.note(fmt("modality %s, R2 %.3f +- %.3f, RMSE %.3f +- %.3f, target std %.3f", report.modality.c_str(),
             report.r2_mean, report.r2_std, report.rmse_mean, report.rmse_std, sd));
  o.require(report.r2_mean >= 0.8, fmt("R2 %.3f < 0.8", report.r2_mean));
  o.require(report.rmse_mean < sd, "RMSE not below target std");
  return o;
}

// ---------------------------------------------------------------- A8 ----
Outcome a8(const Context &ctx) {
  Outcome o;
  const fs::path out = ctx.workdir / "ablation";
  fs::create_directories(out);
  const std::string cmd = "'" + (ctx.source / "tools" / "run_ablation.sh").string() + "' '" + ctx.cli + "' '" +
                          out.string() + "' > '" + (out / "run.log").string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "run_ablation.sh exit status (see " +
                                                               (out / "run.log").string() + ")");
  if (!o.pass) return o;
  std::ifstream in(out / "report.txt");
  const std::string table{std::istreambuf_iterator<char>(in), {}};
  for (const char *label : {"Star Keep", "Star Remove", "Star Substitution"}) {
    std::size_t hits = 0;
    for (std::size_t at = table.find(label); at != std::string::npos; at = table.find(label, at + 1)) ++hits;
    o.require(hits == 2, std::string("RMSE and R2 rows for ") + label);
  }
  std::size_t metric_rows = 0;
  std::istringstream lines(table);
  for (std::string line; std::getline(lines, line);)
    if (line.starts_with("RMSE ") || line.starts_with("R2 ")) ++metric_rows;
  // 3 strategies and 8 task combinations, each with an RMSE and an R2 row
  o.require(metric_rows == 22, fmt("%zu metric rows, want 22", metric_rows));
  o.require(fs::exists(out / "report.json"), "report.json");
  o.note(fmt("tables in %s", (out / "report.txt").string().c_str()));
  return o;
}

// ---------------------------------------------------------------- A9 ----
Outcome a9(const Context &) {
  Outcome o;
  const TinySetup s(24);
  PretrainConfig pc;
  pc.batch_size = 8;
  pc.steps = 20;
  pc.adam.lr = 1e-3;
  pc.seed = 99;
  auto run = [&] {
    return run_pretraining(s.polymers, s.vocab, s.model, pc, {}, init_model(s.model, 99));
  };
  const auto a = run(), b = run();
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  o.require(ta.str() == tb.str(), "loss traces differ");

  FinetuneConfig ft;
  ft.epochs = 3;
  ft.seed = 99;
  std::vector<double> y;
  for (const auto &c : s.corpus) y.push_back(heavy_atom_count(c));
  const auto model = train_regressor(s.polymers, y, a.params, s.model, Modality::kBoth, ft);
  RunConfig rc;
  rc.model = s.model;
  std::stringstream io;
  save_checkpoint(io, Checkpoint{rc, s.vocab, model.params, HeadInfo{Modality::kBoth, model.target_mean,
                                                                    model.target_std}});
  const auto restored = to_finetuned(load_checkpoint(io));
  const auto p1 = predict_properties(model, s.polymers), p2 = predict_properties(restored, s.polymers);
  o.require(p1.size() == p2.size() && std::memcmp(p1.data(), p2.data(), p1.size() * sizeof(double)) == 0,
            "predictions differ after reload");
  o.note(fmt("%zu-byte traces identical, %zu predictions bitwise equal", ta.str().size(), p1.size()));
  return o;
}

// --------------------------------------------------------------- A10 ----
Outcome a10(const Context &) {
  Outcome o;
  Rng corpus_rng(10);
  const auto strings = synthetic_psmiles(2000, corpus_rng);
  const auto vocab = psmiles::Vocabulary::build(strings);
  psmiles::MaskingPolicy policy;
  policy.rate = 0.15;
  Rng rng(1010);
  std::size_t maskable = 0, masked = 0, special_hits = 0;
  std::size_t branch[3] = {0, 0, 0};
  for (const auto &s : strings) {
    if (maskable >= 10000) break;
    const auto seq = psmiles::tokenize(s);
    const auto ids = psmiles::encode_ids(seq, vocab);
    const auto m = psmiles::apply_masking(ids, vocab, policy, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) maskable += !psmiles::is_special_token(seq.tokens[i]);
    masked += m.positions.size();
    for (std::size_t j = 0; j < m.positions.size(); ++j) {
      special_hits += psmiles::is_special_token(seq.tokens[m.positions[j]]);
      ++branch[static_cast<int>(m.branches[j])];
    }
  }
  const double frac = static_cast<double>(masked) / static_cast<double>(maskable);
  const double mtot = static_cast<double>(masked);
  const double f_mask = branch[0] / mtot, f_rand = branch[1] / mtot, f_keep = branch[2] / mtot;
  o.require(maskable >= 10000, "corpus under 10,000 tokens");
  o.require(frac >= 0.14 && frac <= 0.16, fmt("masked fraction %.4f", frac));
  o.require(std::abs(f_mask - 0.8) <= 0.02 && std::abs(f_rand - 0.1) <= 0.02 && std::abs(f_keep - 0.1) <= 0.02,
            fmt("branch split %.3f/%.3f/%.3f", f_mask, f_rand, f_keep));
  o.require(special_hits == 0, fmt("%zu special tokens masked", special_hits));
  o.note(fmt("%zu tokens, masked %.4f, split %.3f/%.3f/%.3f, specials masked %zu", maskable, frac, f_mask,
             f_rand, f_keep, special_hits));
  return o;
}

struct Criterion {
  const char *id;
  double limit_seconds;
  std::function<Outcome(const Context &)> run;
};

}  // namespace
}  // namespace mmp

int main(int argc, char **argv) {
  using namespace mmp;
  CLI::App app{"MMPolymer acceptance checks"};
  std::vector<std::string> only;
  std::string workdir = ".";
  app.add_option("--only", only, "criterion id, e.g. A6 (repeatable)");
  app.add_option("--workdir", workdir, "where checkpoints and reports are written");
  CLI11_PARSE(app, argc, argv);

  const Criterion criteria[] = {
      {"A1", 1.0, a1},    {"A2", 5.0, a2},    {"A3", 60.0, a3},    {"A4", 300.0, a4},  {"A5", 10.0, a5},
      {"A6", 900.0, a6},  {"A7", 600.0, a7},  {"A8", 2700.0, a8},  {"A9", 60.0, a9},   {"A10", 5.0, a10},
  };
  Context ctx;
  ctx.workdir = fs::absolute(workdir);
  fs::create_directories(ctx.workdir);

  bool all_pass = true;
  std::size_t ran = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception &e) {
      out.pass = false;
      out.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) out.require(false, fmt("time %.1fs over %.0fs", secs, c.limit_seconds));
    all_pass &= out.pass;
    std::cout << c.id << (std::strlen(c.id) == 2 ? "  " : " ") << (out.pass ? "PASS" : "FAIL")
              << fmt(" %8.2fs  ", secs) << out.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched --only\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
