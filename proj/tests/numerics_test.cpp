// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "mmpolymer/autodiff.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/gradcheck.hpp"
#include "mmpolymer/params.hpp"

namespace mmp {
namespace {

using ad::Var;

Var row_var(std::vector<double> v) {
  const std::size_t n = v.size();
  return Var::constant(Tensor({1, n}, std::move(v)));
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng &rng, double s = 1.0) {
  return normal_tensor(r, c, s, rng);
}

// Contracts an output with a fixed random weight so every entry matters.
Var project(const Var &x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(x, Var::constant(random_tensor(x.rows(), x.cols(), rng))));
}

void expect_gradcheck(const LossFunction &f, ParamStore &p) {
  const auto report = grad_check(f, p, GradCheckOptions{});
  EXPECT_TRUE(report.passed) << "max rel err " << report.max_rel_error;
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(Softmax, Values) {
  auto s = ad::softmax_rows(row_var({0, 0})).value();
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  s = ad::softmax_rows(row_var({1000, 1000})).value();
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  s = ad::softmax_rows(row_var({0, std::log(3.0)})).value();
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(1);
  const auto s = ad::softmax_rows(Var::constant(random_tensor(20, 7, rng, 30.0))).value();
  for (std::size_t r = 0; r < 20; ++r) {
    double t = 0.0;
    for (std::size_t c = 0; c < 7; ++c) t += s(r, c);
    EXPECT_NEAR(t, 1.0, 1e-12);
  }
}

TEST(Softmax, NonFiniteInput) {
  EXPECT_THROW(ad::softmax_rows(row_var({0, std::numeric_limits<double>::infinity()})), Error);
}

TEST(CrossEntropy, Values) {
  const std::vector<int> labels{1};
  EXPECT_EQ(ad::cross_entropy(row_var({0, 1, 0}), labels).item(), 0.0);
  const std::vector<int> two{0, 3};
  const auto u = Var::constant(Tensor::matrix(2, 4, 0.25));
  EXPECT_NEAR(ad::cross_entropy(u, two).item(), std::log(4.0), 1e-15);
  EXPECT_EQ(ad::cross_entropy(Var::constant(Tensor::matrix(0, 4)), {}).item(), 0.0);
  // clamped, finite
  EXPECT_NEAR(ad::cross_entropy(row_var({1, 0}), labels).item(), -std::log(1e-12), 1e-9);
}

TEST(SmoothL1, Values) {
  const bool all[2] = {true, true};
  const bool first[2] = {true, false};
  Tensor target = Tensor::matrix(2, 3);
  EXPECT_EQ(ad::smooth_l1(Var::constant(target), target, all).item(), 0.0);
  Tensor pred = target;
  pred(0, 0) = 0.5;
  pred(1, 2) = 100.0;  // excluded row
  EXPECT_NEAR(ad::smooth_l1(Var::constant(pred), target, first).item(), 0.125 / 3.0, 1e-15);
}

TEST(SmoothL1, BranchContinuity) {
  const bool inc[1] = {true};
  const Tensor target = Tensor::matrix(1, 1);
  auto at = [&](double e) {
    return ad::smooth_l1(Var::constant(Tensor::scalar(e)), target, inc).item();
  };
  EXPECT_NEAR(at(1.0), 0.5, 1e-12);
  EXPECT_NEAR(at(std::nextafter(1.0, 0.0)), 0.5, 1e-12);
  EXPECT_NEAR(at(-1.0), 0.5, 1e-12);
  // left and right derivatives both 1
  for (double e : {1.0 - 1e-9, 1.0 + 1e-9}) {
    Var x = Var::leaf(Tensor::scalar(e));
    ad::backward(ad::smooth_l1(x, target, inc));
    EXPECT_NEAR(x.grad()[0], 1.0, 1e-8);
  }
}

TEST(Cosine, Values) {
  EXPECT_NEAR(ad::cosine_similarity(row_var({2, 3}), row_var({2, 3})).item(), 1.0, 1e-15);
  EXPECT_NEAR(ad::cosine_similarity(row_var({1, 0}), row_var({0, 1})).item(), 0.0, 1e-15);
  EXPECT_NEAR(ad::cosine_similarity(row_var({1, 0}), row_var({1, 1})).item(), 1.0 / std::sqrt(2.0), 1e-15);
  try {
    ad::cosine_similarity(row_var({0, 0}), row_var({1, 1}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kZeroVector);
  }
}

TEST(Adam, HandEvaluatedFirstStep) {
  ParamStore p;
  p.add("w", Tensor::scalar(1.0));
  Adam adam(AdamConfig{0.1, 0.9, 0.99, 1e-6});
  GradStore g;
  g["w"] = Tensor::scalar(1.0);
  adam.step(p, g);
  EXPECT_EQ(adam.steps(), 1);
  EXPECT_NEAR((*adam.first_moment("w"))[0], 0.1, 1e-15);
  EXPECT_NEAR((*adam.second_moment("w"))[0], 0.01, 1e-15);
  // p' = 1 - 0.1 * 1 / (1 + 1e-6)
  EXPECT_NEAR(p.get("w")[0], 1.0 - 0.1 / (1.0 + 1e-6), 1e-15);
  EXPECT_NEAR(p.get("w")[0], 0.9000001, 1e-9);
}

TEST(Adam, ZeroGradientAndFrozen) {
  ParamStore p;
  p.add("a", Tensor::matrix(2, 2, 3.0));
  p.add("b", Tensor::matrix(1, 2, 1.0), false);
  Adam adam;
  GradStore g;
  g["a"] = Tensor::matrix(2, 2);
  g["b"] = Tensor::matrix(1, 2, 5.0);
  adam.step(p, g);
  EXPECT_EQ(adam.steps(), 1);
  EXPECT_EQ(p.get("a"), Tensor::matrix(2, 2, 3.0));
  EXPECT_EQ(p.get("b"), Tensor::matrix(1, 2, 1.0));
  GradStore bad;
  bad["a"] = Tensor::matrix(3, 1);
  EXPECT_THROW(adam.step(p, bad), Error);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    ParamStore p;
    Rng rng(4);
    p.add("w", random_tensor(3, 3, rng));
    Adam adam;
    GradStore g;
    g["w"] = random_tensor(3, 3, rng);
    adam.step(p, g);
    adam.step(p, g);
    return p.get("w");
  };
  EXPECT_EQ(run(), run());
}

TEST(GradCheck, Quadratic) {
  ParamStore p;
  p.add("t", Tensor::scalar(3.0));
  const auto r = grad_check([](Binding &b) { return ad::scale(ad::mul(b["t"], b["t"]), 0.5); }, p);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_NEAR(r.entries[0].analytic, 3.0, 1e-12);
  EXPECT_NEAR(r.entries[0].numeric, 3.0, 1e-8);
}

TEST(GradCheck, ConstantLoss) {
  ParamStore p;
  p.add("t", Tensor::matrix(2, 2, 1.0));
  const auto r = grad_check(
      [](Binding &b) { return ad::add(ad::scale(ad::sum(b["t"]), 0.0), Var::constant(Tensor::scalar(2.0))); }, p);
  for (const auto &e : r.entries) {
    EXPECT_EQ(e.analytic, 0.0);
    EXPECT_NEAR(e.numeric, 0.0, 1e-12);
  }
}

class PrimitiveGrad : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(21);
    p.add("a", random_tensor(4, 5, rng));
    p.add("b", random_tensor(5, 3, rng));
    p.add("c", random_tensor(4, 5, rng));
    p.add("g", random_tensor(1, 5, rng));
    p.add("bias", random_tensor(1, 5, rng));
  }
  ParamStore p;
};

TEST_F(PrimitiveGrad, Elementwise) {
  expect_gradcheck([](Binding &b) { return project(ad::mul(b["a"], b["c"]) - b["c"], 1); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::add_row(b["a"], b["bias"]), 2); }, p);
  expect_gradcheck([](Binding &b) {
    const Var t[] = {b["a"], b["c"], ad::scale(b["a"], 2.0)};
    return project(ad::add_n(t), 3);
  }, p);
}

TEST_F(PrimitiveGrad, MatmulTranspose) {
  expect_gradcheck([](Binding &b) { return project(ad::matmul(b["a"], b["b"]), 4); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::matmul(ad::transpose(b["b"]), ad::transpose(b["a"])), 5); }, p);
}

TEST_F(PrimitiveGrad, Activations) {
  expect_gradcheck([](Binding &b) { return project(ad::gelu(b["a"]), 6); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::softmax_rows(b["a"]), 7); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::log_softmax_rows(b["a"]), 8); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::layer_norm(b["a"], b["g"], b["bias"]), 9); }, p);
  expect_gradcheck([](Binding &b) { return project(ad::l2_normalize_rows(b["a"]), 10); }, p);
}

TEST_F(PrimitiveGrad, Indexing) {
  const std::vector<int> ids{3, 0, 3, 1};
  const std::vector<std::size_t> rows{2, 0, 2};
  expect_gradcheck([&](Binding &b) { return project(ad::embedding(b["a"], ids), 11); }, p);
  expect_gradcheck([&](Binding &b) { return project(ad::gather_rows(b["a"], rows), 12); }, p);
  expect_gradcheck([&](Binding &b) {
    const Var parts[] = {ad::row(b["a"], 1), ad::row(b["c"], 3)};
    const Var cols[] = {ad::stack_rows(parts), ad::slice_cols(ad::stack_rows(parts), 1, 2)};
    return project(ad::concat_cols(cols), 13);
  }, p);
}

TEST_F(PrimitiveGrad, Losses) {
  const std::vector<int> labels{0, 4, 2, 2};
  expect_gradcheck([&](Binding &b) { return ad::cross_entropy(ad::softmax_rows(b["a"]), labels); }, p);
  expect_gradcheck([&](Binding &b) { return ad::nll_rows(ad::log_softmax_rows(b["a"]), labels); }, p);
  Rng rng(3);
  const Tensor target = random_tensor(4, 5, rng, 1.5);
  const bool inc[4] = {true, false, true, true};
  expect_gradcheck([&](Binding &b) { return ad::smooth_l1(b["a"], target, inc); }, p);
  expect_gradcheck([&](Binding &b) { return ad::mse(b["a"], target); }, p);
  expect_gradcheck([&](Binding &b) { return ad::cosine_similarity(ad::row(b["a"], 0), ad::row(b["c"], 1)); }, p);
  expect_gradcheck([&](Binding &b) { return ad::mean(ad::mul(b["a"], b["a"])); }, p);
}

TEST(AttentionGrad, ScoresAndAttend) {
  Rng rng(5);
  ParamStore p;
  const std::size_t n = 4, heads = 2, width = 6;
  p.add("q", random_tensor(n, width, rng));
  p.add("k", random_tensor(n, width, rng));
  p.add("v", random_tensor(n, width, rng));
  p.add("bias", random_tensor(n * n, heads, rng));
  expect_gradcheck([&](Binding &b) {
    const Var s = ad::attention_scores(b["q"], b["k"], heads, 0.7, b["bias"]);
    return project(ad::attend(s, b["v"], heads), 14) + project(s, 15);
  }, p);
}

TEST(GeometryGrad, GaussianAndDisplacement) {
  Rng rng(6);
  const std::size_t n = 3, types = 2, ch = 3;
  Tensor dist = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = rng.uniform(0.5, 4.0);
  std::vector<std::int32_t> pt;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pt.push_back(static_cast<std::int32_t>((i % 2) * types + j % 2));
  ParamStore p;
  p.add("v", Tensor::matrix(types * types, ch, 1.0));
  p.mutable_value("v")[2] = 0.8;
  p.add("u", random_tensor(types * types, ch, rng, 0.1));
  p.add("mu", Tensor({1, ch}, std::vector<double>{0.5, 2.0, 3.5}));
  p.add("sigma", Tensor({1, ch}, std::vector<double>{1.0, 0.7, 1.3}));
  p.add("w", random_tensor(n * n, 1, rng));
  const Tensor coords = random_tensor(n, 3, rng);
  expect_gradcheck([&](Binding &b) {
    return project(ad::gaussian_pair(dist, pt, b["v"], b["u"], b["mu"], b["sigma"], 1e-2), 16);
  }, p);
  expect_gradcheck([&](Binding &b) { return project(ad::pair_displacement(b["w"], coords), 17); }, p);
}

TEST(GaussianPair, PeakValue) {
  Tensor dist = Tensor::matrix(2, 2);
  dist(0, 1) = dist(1, 0) = 2.5;
  const std::vector<std::int32_t> pt{0, 0, 0, 0};
  const auto out = ad::gaussian_pair(dist, pt, Var::constant(Tensor::matrix(1, 1, 1.0)),
                                     Var::constant(Tensor::matrix(1, 1)),
                                     Var::constant(Tensor::matrix(1, 1, 2.5)),
                                     Var::constant(Tensor::matrix(1, 1, 1.0)), 1e-2)
                       .value();
  EXPECT_NEAR(out[1], 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(out[1], 0.39894, 1e-5);
  EXPECT_EQ(out[1], out[2]);
}

TEST(Tensor, NumericFailureOnNaN) {
  EXPECT_THROW(ad::scale(row_var({1.0, std::nan("")}), 2.0), Error);
}

TEST(ParamStoreTest, Basics) {
  ParamStore p;
  p.add("seq.a", Tensor::matrix(1, 2));
  p.add("struct.b", Tensor::matrix(2, 2));
  EXPECT_THROW(p.add("seq.a", Tensor::matrix(1, 2)), Error);
  EXPECT_THROW(p.set("seq.a", Tensor::matrix(2, 2)), Error);
  EXPECT_EQ(p.scalar_count(), 6u);
  p.set_trainable("seq.", false);
  EXPECT_FALSE(p.trainable("seq.a"));
  EXPECT_TRUE(p.trainable("struct.b"));
  Binding b(p);
  const Var x = b["seq.a"];
  EXPECT_FALSE(x.requires_grad());
  EXPECT_EQ(b.accessed(), (std::set<std::string>{"seq.a"}));
}

}  // namespace
}  // namespace mmp
