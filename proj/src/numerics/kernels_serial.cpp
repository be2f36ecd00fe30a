// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Reference implementations: direct transcriptions of the formulas, one
// output element at a time. Kept for testing the OpenMP kernels.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mmpolymer/kernels.hpp"

namespace mmp::kernels {

double gaussian_density(double x, double s) noexcept {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return std::exp(-0.5 * x * x / (s * s)) * kInvSqrt2Pi / s;
}

namespace serial {

void gemm(const GemmShape &s, const double *a, const double *b, double *c,
          bool accumulate) {
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
        const double bv = s.trans_b ? b[j * s.k + p] : b[p * s.n + j];
        acc += av * bv;
      }
      c[i * s.n + j] = accumulate ? c[i * s.n + j] + acc : acc;
    }
  }
}

void attention_scores(const AttentionShape &s, double scale, const double *q,
                      const double *k, const double *bias, double *scores) {
  const std::size_t width = s.heads * s.head_dim;
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.n; ++j)
      for (std::size_t h = 0; h < s.heads; ++h) {
        double dot = 0.0;
        for (std::size_t c = 0; c < s.head_dim; ++c)
          dot += q[i * width + h * s.head_dim + c] * k[j * width + h * s.head_dim + c];
        const std::size_t idx = (i * s.n + j) * s.heads + h;
        scores[idx] = scale * dot + (bias ? bias[idx] : 0.0);
      }
}

void attention_scores_backward(const AttentionShape &s, double scale,
                               const double *d_scores, const double *q,
                               const double *k, double *d_q, double *d_k) {
  const std::size_t width = s.heads * s.head_dim;
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.n; ++j)
      for (std::size_t h = 0; h < s.heads; ++h) {
        const double g = scale * d_scores[(i * s.n + j) * s.heads + h];
        for (std::size_t c = 0; c < s.head_dim; ++c) {
          const std::size_t qi = i * width + h * s.head_dim + c;
          const std::size_t kj = j * width + h * s.head_dim + c;
          if (d_q) d_q[qi] += g * k[kj];
          if (d_k) d_k[kj] += g * q[qi];
        }
      }
}

void attend(const AttentionShape &s, const double *scores, const double *v,
            double *probs, double *out) {
  const std::size_t width = s.heads * s.head_dim;
  std::fill(out, out + s.n * width, 0.0);
  for (std::size_t h = 0; h < s.heads; ++h) {
    for (std::size_t i = 0; i < s.n; ++i) {
      double mx = -INFINITY;
      for (std::size_t j = 0; j < s.n; ++j)
        mx = std::max(mx, scores[(i * s.n + j) * s.heads + h]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t idx = (i * s.n + j) * s.heads + h;
        probs[idx] = std::exp(scores[idx] - mx);
        z += probs[idx];
      }
      for (std::size_t j = 0; j < s.n; ++j) probs[(i * s.n + j) * s.heads + h] /= z;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double p = probs[(i * s.n + j) * s.heads + h];
        for (std::size_t c = 0; c < s.head_dim; ++c)
          out[i * width + h * s.head_dim + c] += p * v[j * width + h * s.head_dim + c];
      }
    }
  }
}

void attend_backward(const AttentionShape &s, const double *d_out,
                     const double *probs, const double *v, double *d_scores,
                     double *d_v) {
  const std::size_t width = s.heads * s.head_dim;
  std::vector<double> d_p(s.n);
  for (std::size_t h = 0; h < s.heads; ++h) {
    for (std::size_t i = 0; i < s.n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < s.head_dim; ++c)
          acc += d_out[i * width + h * s.head_dim + c] * v[j * width + h * s.head_dim + c];
        d_p[j] = acc;
        dot += acc * probs[(i * s.n + j) * s.heads + h];
      }
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t idx = (i * s.n + j) * s.heads + h;
        d_scores[idx] = probs[idx] * (d_p[j] - dot);
      }
      if (d_v) {
        for (std::size_t j = 0; j < s.n; ++j) {
          const double p = probs[(i * s.n + j) * s.heads + h];
          for (std::size_t c = 0; c < s.head_dim; ++c)
            d_v[j * width + h * s.head_dim + c] += p * d_out[i * width + h * s.head_dim + c];
        }
      }
    }
  }
}

void gaussian_pair(const GaussianShape &s, const double *dist,
                   const std::int32_t *pair_type, const double *v,
                   const double *u, const double *mu, const double *sigma,
                   double *out) {
  for (std::size_t p = 0; p < s.n * s.n; ++p) {
    const std::size_t t = static_cast<std::size_t>(pair_type[p]);
    for (std::size_t k = 0; k < s.channels; ++k) {
      const double sd = std::max(sigma[k], s.sigma_floor);
      const double x = v[t * s.channels + k] * dist[p] + u[t * s.channels + k] - mu[k];
      out[p * s.channels + k] = gaussian_density(x, sd);
    }
  }
}

void gaussian_pair_backward(const GaussianShape &s, const double *d_out,
                            const double *dist, const std::int32_t *pair_type,
                            const double *v, const double *u, const double *mu,
                            const double *sigma, double *d_v, double *d_u,
                            double *d_mu, double *d_sigma) {
  for (std::size_t p = 0; p < s.n * s.n; ++p) {
    const std::size_t t = static_cast<std::size_t>(pair_type[p]);
    for (std::size_t k = 0; k < s.channels; ++k) {
      const bool floored = sigma[k] < s.sigma_floor;
      const double sd = floored ? s.sigma_floor : sigma[k];
      const double x = v[t * s.channels + k] * dist[p] + u[t * s.channels + k] - mu[k];
      const double g = gaussian_density(x, sd) * d_out[p * s.channels + k];
      const double dx = -x / (sd * sd) * g;
      if (d_v) d_v[t * s.channels + k] += dx * dist[p];
      if (d_u) d_u[t * s.channels + k] += dx;
      if (d_mu) d_mu[k] -= dx;
      if (d_sigma && !floored) d_sigma[k] += g * (x * x / (sd * sd * sd) - 1.0 / sd);
    }
  }
}

}  // namespace serial
}  // namespace mmp::kernels
