// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_AUTODIFF_HPP_
#define MMPOLYMER_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mmpolymer/tensor.hpp"

namespace mmp::ad {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily by backward()
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node &)> backward;

  Tensor &grad_buffer();
};

}  // namespace detail

// Handle to a value in a dynamically recorded expression graph. Operations
// record their inputs and a closure that pushes the output gradient back to
// them; backward() replays the closures in reverse topological order.
// Every forward result is checked for NaN/Inf (Errc::kNumericFailure).
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value);  // trainable: receives a gradient

  bool defined() const noexcept { return node_ != nullptr; }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  const Tensor &value() const { return node_->value; }
  // Zero-size until backward() reaches this node.
  const Tensor &grad() const { return node_->grad; }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  double item() const { return node_->value.item(); }

  const std::shared_ptr<detail::Node> &node() const noexcept { return node_; }
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) { }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Seeds d(root)/d(root) = 1 for a 1 x 1 root and accumulates gradients
// into every reachable node that requires one.
void backward(const Var &root);

// --- elementwise and linear algebra ---------------------------------------
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
Var scale(const Var &a, double factor);
Var add_n(std::span<const Var> terms);  // sum of equally shaped terms
Var add_row(const Var &x, const Var &bias);  // bias 1 x n broadcast over rows
Var matmul(const Var &a, const Var &b);
Var transpose(const Var &a);
Var sum(const Var &a);   // -> 1 x 1
Var mean(const Var &a);  // -> 1 x 1

// --- activations and normalization ----------------------------------------
Var gelu(const Var &x);  // tanh approximation
Var softmax_rows(const Var &x);
Var log_softmax_rows(const Var &x);
Var layer_norm(const Var &x, const Var &gamma, const Var &beta, double eps = 1e-5);
Var l2_normalize_rows(const Var &x);  // Errc::kZeroVector on a zero row

// --- indexing and reshaping ------------------------------------------------
Var embedding(const Var &table, std::span<const int> ids);
Var gather_rows(const Var &x, std::span<const std::size_t> rows);
Var row(const Var &x, std::size_t index);
Var stack_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var &x, std::size_t begin, std::size_t count);

// --- losses ---------------------------------------------------------------
// Mean over rows of -log(max(p[i, label_i], 1e-12)); 0 for an empty batch.
Var cross_entropy(const Var &probs, std::span<const int> labels);
// Mean over rows of -logp[i, label_i].
Var nll_rows(const Var &log_probs, std::span<const int> labels);
// Mean over included rows and all columns of the piecewise
// 0.5 e^2 (|e| < 1), |e| - 0.5 (otherwise).
Var smooth_l1(const Var &pred, const Tensor &target, std::span<const bool> include_rows);
Var mse(const Var &pred, const Tensor &target);
Var cosine_similarity(const Var &a, const Var &b);  // two 1 x n rows -> 1 x 1

// --- attention and geometry -----------------------------------------------
// (N*N) x heads scores: scale * Q_h K_h^T + bias. `bias` may be undefined.
Var attention_scores(const Var &q, const Var &k, std::size_t heads, double scale,
                     const Var &bias);
// Row-softmax of each head slice of `scores`, applied to V. N x width.
Var attend(const Var &scores, const Var &v, std::size_t heads);
// Pair-type aware Gaussian basis over an N x N distance matrix.
Var gaussian_pair(const Tensor &dist, std::span<const std::int32_t> pair_type,
                  const Var &v, const Var &u, const Var &mu, const Var &sigma,
                  double sigma_floor);
// out_i = c_i + (1/N) sum_j w_ij (c_i - c_j), w given as (N*N) x 1.
Var pair_displacement(const Var &weights, const Tensor &coords);

inline Var operator+(const Var &a, const Var &b) { return add(a, b); }
inline Var operator-(const Var &a, const Var &b) { return sub(a, b); }

}  // namespace mmp::ad

#endif  // MMPOLYMER_AUTODIFF_HPP_
