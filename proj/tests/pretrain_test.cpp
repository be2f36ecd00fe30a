// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mmpolymer/error.hpp"
#include "mmpolymer/gradcheck.hpp"
#include "mmpolymer/pretrain.hpp"
#include "mmpolymer/synthetic.hpp"

namespace mmp {
namespace {

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

struct Fixture {
  std::vector<std::string> corpus;
  psmiles::Vocabulary vocab;
  ModelConfig model;
  std::vector<Polymer> polymers;

  explicit Fixture(std::size_t n = 12) {
    Rng rng(4);
    SyntheticOptions so;
    so.max_motifs = 2;
    corpus = synthetic_psmiles(n, rng, so);
    vocab = build_vocabulary(corpus, psmiles::StarStrategy::kSubstitute);
    model = tiny_model(vocab.size());
    polymers = prepare_polymers(corpus, vocab, psmiles::StarStrategy::kSubstitute, model);
  }

  std::vector<PretrainSample> batch(TaskToggles t, std::uint64_t seed = 9) const {
    PretrainConfig pc;
    std::vector<PretrainSample> out;
    for (std::size_t i = 0; i < 4; ++i) {
      Rng rng(mix_seed(seed, i));
      out.push_back(make_sample(polymers[i], vocab, model, pc, t, rng));
    }
    return out;
  }
};

Tensor random_rows(std::size_t r, std::size_t c, Rng &rng) {
  Tensor t = Tensor::matrix(r, c);
  for (double &x : t.values()) x = rng.normal();
  return t;
}

// Direct evaluation: mean_i [log sum_j exp(s_ij / tau) - s_ii / tau].
double nce_oracle(const Tensor &a, const Tensor &b, double tau) {
  const std::size_t k = a.rows(), d = a.cols();
  auto norm = [&](const Tensor &t, std::size_t i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += t(i, c) * t(i, c);
    return std::sqrt(s);
  };
  double loss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double z = 0.0, own = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += a(i, c) * b(j, c);
      const double s = dot / (norm(a, i) * norm(b, j)) / tau;
      z += std::exp(s);
      if (i == j) own = s;
    }
    loss += std::log(z) - own;
  }
  return loss / static_cast<double>(k);
}

TEST(InfoNce, MatchesDirectEvaluation) {
  Rng rng(1);
  for (std::size_t k : {2u, 5u, 9u}) {
    const Tensor a = random_rows(k, 3, rng), b = random_rows(k, 3, rng);
    for (double tau : {0.1, 0.5, 1.0}) {
      const double got = info_nce(ad::Var::constant(a), ad::Var::constant(b), tau).item();
      EXPECT_NEAR(got, nce_oracle(a, b, tau), 1e-12);
    }
  }
}

TEST(InfoNce, SingleAnchorAndEqualSimilarities) {
  Rng rng(2);
  const Tensor a = random_rows(1, 6, rng), b = random_rows(1, 6, rng);
  EXPECT_NEAR(info_nce(ad::Var::constant(a), ad::Var::constant(b), 0.1).item(), 0.0, 1e-12);
  for (std::size_t k : {2u, 7u, 32u}) {
    Tensor x = Tensor::matrix(k, 4), y = Tensor::matrix(k, 4);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < 4; ++c) {
        x(i, c) = 0.3 + c;
        y(i, c) = 1.0 - 0.2 * c;
      }
    EXPECT_NEAR(info_nce(ad::Var::constant(x), ad::Var::constant(y), 0.1).item(),
                std::log(static_cast<double>(k)), 1e-10);
  }
}

TEST(InfoNce, ZeroRowIsAnError) {
  Tensor x = Tensor::matrix(2, 3), y = Tensor::matrix(2, 3);
  x(0, 0) = 1.0;
  y(0, 0) = y(1, 1) = 1.0;
  EXPECT_THROW(info_nce(ad::Var::constant(x), ad::Var::constant(y), 0.1), Error);
}

TEST(Toggles, ParseAndCombinations) {
  const auto t = TaskToggles::parse("mlm,contrast");
  EXPECT_TRUE(t.mlm);
  EXPECT_FALSE(t.denoise);
  EXPECT_TRUE(t.contrast);
  EXPECT_FALSE(TaskToggles::parse("none").any());
  EXPECT_THROW(TaskToggles::parse("mlm,bogus"), Error);
  EXPECT_EQ(TaskToggles::all_combinations().size(), 8u);
  for (const auto &c : TaskToggles::all_combinations()) {
    const auto back = TaskToggles::parse(c.to_string());
    EXPECT_EQ(back.mlm, c.mlm);
    EXPECT_EQ(back.denoise, c.denoise);
    EXPECT_EQ(back.contrast, c.contrast);
  }
}

TEST(TotalLoss, AdditiveOverEnabledTasks) {
  const Fixture f;
  const auto params = init_model(f.model, 3);
  for (const auto &t : TaskToggles::all_combinations()) {
    if (!t.any()) continue;
    const auto batch = f.batch(t);
    Binding b(params);
    const auto r = total_loss(b, f.model, batch, t, 0.1);
    EXPECT_NEAR(r.parts.total, r.parts.l_1d + r.parts.l_3d + r.parts.l_contrast, 1e-12);
    EXPECT_EQ(r.total.item(), r.parts.total);
    if (!t.mlm) EXPECT_EQ(r.parts.l_1d, 0.0);
    if (!t.denoise) EXPECT_EQ(r.parts.l_3d, 0.0);
    if (!t.contrast) EXPECT_EQ(r.parts.l_contrast, 0.0);
  }
}

// A disabled task contributes no gradient to its own head.
TEST(TotalLoss, DisabledHeadsReceiveNoGradient) {
  const Fixture f;
  const auto params = init_model(f.model, 3);
  const TaskToggles only_mlm{true, false, false};
  const auto batch = f.batch(only_mlm);
  Binding b(params);
  ad::backward(total_loss(b, f.model, batch, only_mlm, 0.1).total);
  const auto g = b.gradients();
  for (const auto &[name, grad] : g) {
    if (name.starts_with("contrast.") || name.starts_with("denoise.") || name.starts_with("struct."))
      for (double x : grad.values()) EXPECT_EQ(x, 0.0) << name;
  }
  EXPECT_TRUE(g.contains("mlm.w"));
}

TEST(Samples, DisabledCorruptionLeavesViewsClean) {
  const Fixture f;
  const auto batch = f.batch(TaskToggles{false, false, true});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_TRUE(batch[i].masked.positions.empty());
    EXPECT_EQ(batch[i].masked.input_ids, f.polymers[i].ids);
    EXPECT_EQ(batch[i].noisy.noisy, f.polymers[i].conformer.coords);
  }
}

TEST(TotalLoss, GradientCheck) {
  const Fixture f;
  auto params = init_model(f.model, 5);
  const TaskToggles all;
  const auto batch = f.batch(all);
  GradCheckOptions opt;
  opt.samples = 150;
  opt.seed = 7;
  const auto report = grad_check(
      [&](Binding &b) { return total_loss(b, f.model, batch, all, 0.1).total; }, params, opt);
  EXPECT_GE(report.entries.size(), 100u);
  EXPECT_TRUE(report.passed) << "max rel error " << report.max_rel_error;
}

TEST(Pretraining, DeterministicTraceAndParams) {
  const Fixture f;
  PretrainConfig pc;
  pc.batch_size = 4;
  pc.steps = 6;
  pc.adam.lr = 1e-3;
  pc.seed = 11;
  const auto a = run_pretraining(f.polymers, f.vocab, f.model, pc, {}, init_model(f.model, 1));
  const auto b = run_pretraining(f.polymers, f.vocab, f.model, pc, {}, init_model(f.model, 1));
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.trace.size(), 6u);
}

TEST(Pretraining, ZeroStepsAndDisabledHeadsUnchanged) {
  const Fixture f;
  PretrainConfig pc;
  pc.batch_size = 4;
  pc.steps = 0;
  const auto init = init_model(f.model, 2);
  EXPECT_TRUE(run_pretraining(f.polymers, f.vocab, f.model, pc, {}, init).params == init);

  pc.steps = 4;
  pc.adam.lr = 1e-2;
  const auto r = run_pretraining(f.polymers, f.vocab, f.model, pc, TaskToggles{true, false, false}, init);
  for (const auto &name : init.names()) {
    const bool touched = name.starts_with("seq.") || name.starts_with("mlm.");
    if (!touched) EXPECT_EQ(r.params.get(name), init.get(name)) << name;
  }
  EXPECT_NE(r.params.get("mlm.w"), init.get("mlm.w"));
  EXPECT_THROW(run_pretraining(f.polymers, f.vocab, f.model, pc, TaskToggles::parse("none"), init), Error);
}

TEST(Pretraining, TraceMeanAndCsv) {
  std::vector<TraceRow> rows(4);
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].step = i;
    rows[i].loss.l_1d = static_cast<double>(i);
  }
  EXPECT_EQ(trace_mean(rows, 1, 3, &LossBreakdown::l_1d), 1.5);
  EXPECT_THROW(trace_mean(rows, 2, 2, &LossBreakdown::l_1d), Error);
  std::ostringstream os;
  write_trace_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "step,l_1d,l_3d,l_contrast,total");
}

TEST(Retrieval, RangeAndEmpty) {
  const Fixture f(6);
  auto params = init_model(f.model, 8);
  const double acc = retrieval_accuracy(params, f.model, f.polymers);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(retrieval_accuracy(params, f.model, {}), 0.0);
}

TEST(Corpus, ReadTrimsAndSkipsBlanks) {
  std::istringstream in("  *CC*  \n\n*CC(*)F\r\n   \n");
  EXPECT_EQ(read_corpus(in), (std::vector<std::string>{"*CC*", "*CC(*)F"}));
}

}  // namespace
}  // namespace mmp
