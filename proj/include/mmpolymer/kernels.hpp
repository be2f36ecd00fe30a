// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_KERNELS_HPP_
#define MMPOLYMER_KERNELS_HPP_

#include <cstddef>
#include <cstdint>

namespace mmp::kernels {

// Hot loops of the encoders. Each kernel has a plain serial reference in
// namespace `serial` and an OpenMP version in namespace `omp`; the
// dispatching entry points at the bottom pick one by the process-wide
// backend. The OpenMP versions only split work over independent outputs, so
// results do not depend on the thread count.
//
// Layout conventions:
//   matrices are row-major;
//   multi-head activations are N x (heads * head_dim), head h owning
//     columns [h * head_dim, (h + 1) * head_dim);
//   pair tensors are (N * N) x channels, entry (i, j, h) at
//     (i * N + j) * channels + h.

enum class Backend : std::uint8_t { kSerial, kOpenMP };

void set_backend(Backend backend) noexcept;
Backend backend() noexcept;

struct GemmShape {
  std::size_t m, n, k;  // C is m x n, inner dimension k
  bool trans_a = false; // A stored k x m
  bool trans_b = false; // B stored n x k
};

struct AttentionShape {
  std::size_t n;         // sequence / atom count
  std::size_t heads;
  std::size_t head_dim;
};

struct GaussianShape {
  std::size_t n;         // atoms (pairs are n * n)
  std::size_t channels;
  double sigma_floor;
};

#define MMP_KERNEL_DECLS                                                        \
  /* C (+)= op(A) op(B) */                                                     \
  void gemm(const GemmShape &s, const double *a, const double *b, double *c,   \
            bool accumulate);                                                  \
  /* S = scale * Q_h K_h^T + bias (bias may be null) */                        \
  void attention_scores(const AttentionShape &s, double scale, const double *q, \
                        const double *k, const double *bias, double *scores);  \
  /* dQ += scale * dS_h K_h ; dK += scale * dS_h^T Q_h */                      \
  void attention_scores_backward(const AttentionShape &s, double scale,        \
                                 const double *d_scores, const double *q,      \
                                 const double *k, double *d_q, double *d_k);   \
  /* P_h = rowsoftmax(S_h) ; out_h = P_h V_h */                                \
  void attend(const AttentionShape &s, const double *scores, const double *v,  \
              double *probs, double *out);                                     \
  /* dS from dOut through softmax ; dV += P_h^T dOut_h */                      \
  void attend_backward(const AttentionShape &s, const double *d_out,           \
                       const double *probs, const double *v, double *d_scores, \
                       double *d_v);                                           \
  /* out[i,j,k] = G(v[t,k] d_ij + u[t,k] - mu[k], max(sigma[k], floor)) */     \
  void gaussian_pair(const GaussianShape &s, const double *dist,               \
                     const std::int32_t *pair_type, const double *v,           \
                     const double *u, const double *mu, const double *sigma,   \
                     double *out);                                             \
  /* accumulates parameter gradients */                                        \
  void gaussian_pair_backward(const GaussianShape &s, const double *d_out,     \
                              const double *dist, const std::int32_t *pair_type, \
                              const double *v, const double *u,                \
                              const double *mu, const double *sigma,           \
                              double *d_v, double *d_u, double *d_mu,          \
                              double *d_sigma);

namespace serial {
MMP_KERNEL_DECLS
}  // namespace serial

namespace omp {
MMP_KERNEL_DECLS
}  // namespace omp

MMP_KERNEL_DECLS

#undef MMP_KERNEL_DECLS

// Normalized Gaussian density exp(-x^2 / 2s^2) / (s sqrt(2 pi)).
double gaussian_density(double x, double s) noexcept;

}  // namespace mmp::kernels

#endif  // MMPOLYMER_KERNELS_HPP_
