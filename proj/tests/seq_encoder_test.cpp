// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"
#include "mmpolymer/seq_encoder.hpp"
#include "test_util.hpp"

namespace mmp {
namespace {

using namespace testing::oracle;

SeqConfig small_config(std::size_t vocab = 12) {
  SeqConfig c;
  c.dim = 8;
  c.layers = 2;
  c.heads = 2;
  c.ff_dim = 16;
  c.max_length = 32;
  c.vocab_size = vocab;
  return c;
}

ParamStore small_params(const SeqConfig &c, std::uint64_t seed = 1) {
  ParamStore p;
  Rng rng(seed);
  init_seq_params(p, c, rng);
  // Non-trivial norms and biases so the check exercises every path.
  for (const auto &name : p.names())
    if (name.find(".b") != std::string::npos || name.ends_with(".g"))
      for (double &x : p.mutable_value(name).values()) x += 0.1 * rng.normal();
  for (double &x : p.mutable_value("seq.tok_emb").values()) x *= 20.0;
  return p;
}

TEST(Positional, Values) {
  auto e = positional_embedding(0, 6);
  EXPECT_EQ(e, (std::vector<double>{0, 1, 0, 1, 0, 1}));
  e = positional_embedding(1, 4);
  EXPECT_NEAR(e[0], 0.841471, 1e-6);
  EXPECT_NEAR(e[1], 0.540302, 1e-6);
  EXPECT_NEAR(e[2], std::sin(0.01), 1e-15);
  EXPECT_NEAR(e[3], 0.99995, 1e-5);
  for (std::size_t pos : {3u, 17u, 400u}) {
    const auto v = positional_embedding(pos, 10);
    double s = 0.0;
    for (double x : v) s += x * x;
    EXPECT_NEAR(s, 5.0, 1e-12);
  }
  EXPECT_THROW(positional_embedding(1, 5), Error);
}

TEST(SeqConfigTest, Validation) {
  SeqConfig c = small_config();
  c.heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.dim = 7;
  c.heads = 1;
  EXPECT_THROW(c.validate(), Error);
  const auto full = SeqConfig::full_scale(100);
  EXPECT_EQ(full.layers, 6u);
  EXPECT_EQ(full.heads, 12u);
}

TEST(SeqEncoder, ShapesAndErrors) {
  const auto c = small_config();
  const auto p = small_params(c);
  Binding b(p);
  const std::vector<int> ids{1, 5, 6, 7, 2};
  const auto out = encode_sequence(b, c, ids);
  EXPECT_EQ(out.tokens.rows(), 5u);
  EXPECT_EQ(out.pooled.rows(), 1u);
  EXPECT_EQ(out.pooled.cols(), c.dim);
  EXPECT_THROW(encode_sequence(b, c, std::vector<int>{}), Error);
  EXPECT_THROW(encode_sequence(b, c, std::vector<int>{1, 99, 2}), Error);
  EXPECT_THROW(encode_sequence(b, c, std::vector<int>(40, 5)), Error);
}

TEST(SeqEncoder, Deterministic) {
  const auto c = small_config();
  const std::vector<int> ids{1, 5, 6, 7, 2};
  const auto p1 = small_params(c, 3), p2 = small_params(c, 3);
  Binding b1(p1), b2(p2);
  const auto a = encode_sequence(b1, c, ids).pooled.value();
  const auto b = encode_sequence(b2, c, ids).pooled.value();
  EXPECT_EQ(a, b);
}

TEST(SeqEncoder, PadExtensionInvariance) {
  const auto c = small_config();
  const auto p = small_params(c);
  std::vector<int> ids{1, 5, 6, 7, 8, 2};
  Binding b(p);
  const auto a = encode_sequence(b, c, ids).pooled.value();
  ids.insert(ids.end(), 5, psmiles::Vocabulary::kPadId);
  const auto z = encode_sequence(b, c, ids).pooled.value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], z[i], 1e-10);
}

// Bidirectional: changing the last real token moves every position.
TEST(SeqEncoder, FullAttention) {
  const auto c = small_config();
  const auto p = small_params(c);
  Binding b(p);
  const auto a = encode_sequence(b, c, std::vector<int>{1, 5, 6, 7, 2}).tokens.value();
  const auto z = encode_sequence(b, c, std::vector<int>{1, 5, 6, 9, 2}).tokens.value();
  for (std::size_t r = 0; r < 5; ++r) {
    double diff = 0.0;
    for (std::size_t k = 0; k < c.dim; ++k) diff += std::abs(a(r, k) - z(r, k));
    EXPECT_GT(diff, 1e-9) << "row " << r;
  }
}

TEST(SeqEncoder, PadRowsGetNoGradient) {
  const auto c = small_config();
  const auto p = small_params(c);
  Binding b(p);
  const std::vector<int> ids{1, 5, 6, 7, 2, 0, 0};
  const auto out = encode_sequence(b, c, ids);
  const std::vector<std::size_t> pos{2};
  const std::vector<int> labels{6};
  ad::backward(ad::cross_entropy(mlm_probabilities(b, c, out.tokens, pos), labels));
  const auto g = b.gradients().at("seq.tok_emb");
  for (std::size_t k = 0; k < c.dim; ++k) EXPECT_EQ(g(0, k), 0.0);
  double other = 0.0;
  for (std::size_t k = 0; k < c.dim; ++k) other += std::abs(g(5, k));
  EXPECT_GT(other, 0.0);
}

TEST(MlmHead, EmptyAndUniform) {
  const auto c = small_config();
  auto p = small_params(c);
  p.set("mlm.w", Tensor::matrix(c.dim, c.vocab_size));
  p.set("mlm.b", Tensor::matrix(1, c.vocab_size));
  Binding b(p);
  const auto out = encode_sequence(b, c, std::vector<int>{1, 5, 6, 2});
  EXPECT_EQ(mlm_probabilities(b, c, out.tokens, {}).rows(), 0u);
  const std::vector<std::size_t> pos{1, 2};
  const auto probs = mlm_probabilities(b, c, out.tokens, pos).value();
  for (std::size_t i = 0; i < probs.size(); ++i) EXPECT_NEAR(probs[i], 1.0 / 12.0, 1e-15);
}

// Independent forward pass of a 1-layer, d = 2, single-head model.
TEST(SeqEncoder, HandOracleOneLayer) {
  SeqConfig c;
  c.dim = 2;
  c.layers = 1;
  c.heads = 1;
  c.ff_dim = 2;
  c.max_length = 8;
  c.vocab_size = 7;
  ParamStore p;
  Rng rng(0);
  init_seq_params(p, c, rng);

  const Mat emb{{0, 0}, {0.3, -0.2}, {0.1, 0.4}, {0, 0}, {0, 0}, {-0.5, 0.25}, {0.7, 0.1}};
  const Mat wq{{0.6, -0.3}, {0.2, 0.9}}, wk{{-0.4, 0.5}, {0.8, 0.1}}, wv{{0.3, 0.3}, {-0.7, 0.6}},
      wo{{0.5, -0.2}, {0.1, 0.4}}, w1{{1.1, -0.6}, {0.4, 0.8}}, w2{{-0.3, 0.7}, {0.9, 0.2}};
  const std::vector<double> bq{0.05, -0.1}, bk{0.02, 0.03}, bv{-0.04, 0.06}, bo{0.01, -0.02},
      b1{0.1, -0.05}, b2{0.03, 0.07}, g1{1.2, 0.8}, be1{0.1, -0.1}, g2{0.9, 1.1}, be2{-0.05, 0.05},
      gf{1.05, 0.95}, bf{0.02, -0.03};
  p.set("seq.tok_emb", tensor_of(emb));
  p.set("seq.l0.attn.wq", tensor_of(wq));
  p.set("seq.l0.attn.wk", tensor_of(wk));
  p.set("seq.l0.attn.wv", tensor_of(wv));
  p.set("seq.l0.attn.wo", tensor_of(wo));
  p.set("seq.l0.ff.w1", tensor_of(w1));
  p.set("seq.l0.ff.w2", tensor_of(w2));
  p.set("seq.l0.attn.bq", tensor_of({bq}));
  p.set("seq.l0.attn.bk", tensor_of({bk}));
  p.set("seq.l0.attn.bv", tensor_of({bv}));
  p.set("seq.l0.attn.bo", tensor_of({bo}));
  p.set("seq.l0.ff.b1", tensor_of({b1}));
  p.set("seq.l0.ff.b2", tensor_of({b2}));
  p.set("seq.l0.ln1.g", tensor_of({g1}));
  p.set("seq.l0.ln1.b", tensor_of({be1}));
  p.set("seq.l0.ln2.g", tensor_of({g2}));
  p.set("seq.l0.ln2.b", tensor_of({be2}));
  p.set("seq.ln_f.g", tensor_of({gf}));
  p.set("seq.ln_f.b", tensor_of({bf}));

  const std::vector<int> ids{1, 5, 6};
  // x = sqrt(d) E[id] + [sin pos, cos pos]
  Mat x(3, std::vector<double>(2));
  for (std::size_t t = 0; t < 3; ++t) {
    x[t][0] = std::sqrt(2.0) * emb[ids[t]][0] + std::sin(static_cast<double>(t));
    x[t][1] = std::sqrt(2.0) * emb[ids[t]][1] + std::cos(static_cast<double>(t));
  }
  const Mat a = ln(x, g1, be1);
  const Mat q = addb(mm(a, wq), bq), k = addb(mm(a, wk), bk), v = addb(mm(a, wv), bv);
  Mat probs(3, std::vector<double>(3));
  for (std::size_t i = 0; i < 3; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      probs[i][j] = std::exp((q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0));
      z += probs[i][j];
    }
    for (double &e : probs[i]) e /= z;
  }
  const Mat attn = addb(mm(mm(probs, v), wo), bo);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) x[i][j] += attn[i][j];
  Mat h = addb(mm(ln(x, g2, be2), w1), b1);
  for (auto &r : h)
    for (double &e : r) e = gelu(e);
  const Mat ff = addb(mm(h, w2), b2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) x[i][j] += ff[i][j];
  const Mat out = ln(x, gf, bf);

  Binding b(p);
  const auto got = encode_sequence(b, c, ids);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got.tokens.value()(i, j), out[i][j], 1e-12);
  EXPECT_NEAR(got.pooled.value()[0], out[0][0], 1e-12);
  EXPECT_NEAR(got.pooled.value()[1], out[0][1], 1e-12);
}

}  // namespace
}  // namespace mmp
