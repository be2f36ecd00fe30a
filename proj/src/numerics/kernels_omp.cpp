// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "mmpolymer/kernels.hpp"

namespace mmp::kernels {
namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kMinParallelWork = 1 << 15;

std::atomic<Backend> g_backend{Backend::kOpenMP};

}  // namespace

void set_backend(Backend b) noexcept { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() noexcept { return g_backend.load(std::memory_order_relaxed); }

namespace omp {

void gemm(const GemmShape &s, const double *a, const double *b, double *c,
          bool accumulate) {
  const auto m = static_cast<std::ptrdiff_t>(s.m);
  const bool par = s.m * s.n * s.k >= kMinParallelWork;
  if (!s.trans_b) {
    // row-axpy form: C[i,:] += A[i,p] * B[p,:]
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t ii = 0; ii < m; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double *crow = c + i * s.n;
      if (!accumulate) std::fill(crow, crow + s.n, 0.0);
      for (std::size_t p = 0; p < s.k; ++p) {
        const double av = s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
        if (av == 0.0) continue;
        const double *brow = b + p * s.n;
        for (std::size_t j = 0; j < s.n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t ii = 0; ii < m; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t j = 0; j < s.n; ++j) {
        const double *brow = b + j * s.k;
        double acc = 0.0;
        if (s.trans_a) {
          for (std::size_t p = 0; p < s.k; ++p) acc += a[p * s.m + i] * brow[p];
        } else {
          const double *arow = a + i * s.k;
          for (std::size_t p = 0; p < s.k; ++p) acc += arow[p] * brow[p];
        }
        c[i * s.n + j] = accumulate ? c[i * s.n + j] + acc : acc;
      }
    }
  }
}

void attention_scores(const AttentionShape &s, double scale, const double *q,
                      const double *k, const double *bias, double *scores) {
  const std::size_t width = s.heads * s.head_dim;
  const auto n = static_cast<std::ptrdiff_t>(s.n);
#pragma omp parallel for schedule(static) if (s.n * s.n * width >= kMinParallelWork)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double *qrow = q + i * width;
    for (std::size_t j = 0; j < s.n; ++j) {
      const double *krow = k + j * width;
      double *srow = scores + (i * s.n + j) * s.heads;
      for (std::size_t h = 0; h < s.heads; ++h) {
        const double *qh = qrow + h * s.head_dim;
        const double *kh = krow + h * s.head_dim;
        double dot = 0.0;
        for (std::size_t c = 0; c < s.head_dim; ++c) dot += qh[c] * kh[c];
        srow[h] = scale * dot + (bias ? bias[(i * s.n + j) * s.heads + h] : 0.0);
      }
    }
  }
}

void attention_scores_backward(const AttentionShape &s, double scale,
                               const double *d_scores, const double *q,
                               const double *k, double *d_q, double *d_k) {
  const std::size_t width = s.heads * s.head_dim;
  const auto n = static_cast<std::ptrdiff_t>(s.n);
  const bool par = s.n * s.n * width >= kMinParallelWork;
  if (d_q) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t j = 0; j < s.n; ++j) {
        const double *ds = d_scores + (i * s.n + j) * s.heads;
        for (std::size_t h = 0; h < s.heads; ++h) {
          const double g = scale * ds[h];
          double *dq = d_q + i * width + h * s.head_dim;
          const double *kh = k + j * width + h * s.head_dim;
          for (std::size_t c = 0; c < s.head_dim; ++c) dq[c] += g * kh[c];
        }
      }
    }
  }
  if (d_k) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      for (std::size_t i = 0; i < s.n; ++i) {
        const double *ds = d_scores + (i * s.n + j) * s.heads;
        for (std::size_t h = 0; h < s.heads; ++h) {
          const double g = scale * ds[h];
          double *dk = d_k + j * width + h * s.head_dim;
          const double *qh = q + i * width + h * s.head_dim;
          for (std::size_t c = 0; c < s.head_dim; ++c) dk[c] += g * qh[c];
        }
      }
    }
  }
}

void attend(const AttentionShape &s, const double *scores, const double *v,
            double *probs, double *out) {
  const std::size_t width = s.heads * s.head_dim;
  const auto n = static_cast<std::ptrdiff_t>(s.n);
#pragma omp parallel for schedule(static) if (s.n * s.n * width >= kMinParallelWork)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double *orow = out + i * width;
    std::fill(orow, orow + width, 0.0);
    for (std::size_t h = 0; h < s.heads; ++h) {
      double mx = -INFINITY;
      for (std::size_t j = 0; j < s.n; ++j)
        mx = std::max(mx, scores[(i * s.n + j) * s.heads + h]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t idx = (i * s.n + j) * s.heads + h;
        probs[idx] = std::exp(scores[idx] - mx);
        z += probs[idx];
      }
      const double inv = 1.0 / z;
      double *oh = orow + h * s.head_dim;
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t idx = (i * s.n + j) * s.heads + h;
        probs[idx] *= inv;
        const double p = probs[idx];
        if (p == 0.0) continue;
        const double *vh = v + j * width + h * s.head_dim;
        for (std::size_t c = 0; c < s.head_dim; ++c) oh[c] += p * vh[c];
      }
    }
  }
}

void attend_backward(const AttentionShape &s, const double *d_out,
                     const double *probs, const double *v, double *d_scores,
                     double *d_v) {
  const std::size_t width = s.heads * s.head_dim;
  const auto n = static_cast<std::ptrdiff_t>(s.n);
  const bool par = s.n * s.n * width >= kMinParallelWork;
#pragma omp parallel if (par)
  {
    std::vector<double> d_p(s.n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t h = 0; h < s.heads; ++h) {
        const double *go = d_out + i * width + h * s.head_dim;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
          const double *vh = v + j * width + h * s.head_dim;
          double acc = 0.0;
          for (std::size_t c = 0; c < s.head_dim; ++c) acc += go[c] * vh[c];
          d_p[j] = acc;
          dot += acc * probs[(i * s.n + j) * s.heads + h];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t idx = (i * s.n + j) * s.heads + h;
          d_scores[idx] = probs[idx] * (d_p[j] - dot);
        }
      }
    }
  }
  if (d_v) {
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
      const auto j = static_cast<std::size_t>(jj);
      for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t h = 0; h < s.heads; ++h) {
          const double p = probs[(i * s.n + j) * s.heads + h];
          if (p == 0.0) continue;
          const double *go = d_out + i * width + h * s.head_dim;
          double *dv = d_v + j * width + h * s.head_dim;
          for (std::size_t c = 0; c < s.head_dim; ++c) dv[c] += p * go[c];
        }
      }
    }
  }
}

void gaussian_pair(const GaussianShape &s, const double *dist,
                   const std::int32_t *pair_type, const double *v,
                   const double *u, const double *mu, const double *sigma,
                   double *out) {
  const auto pairs = static_cast<std::ptrdiff_t>(s.n * s.n);
#pragma omp parallel for schedule(static) if (s.n * s.n * s.channels >= kMinParallelWork / 8)
  for (std::ptrdiff_t pp = 0; pp < pairs; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    const std::size_t t = static_cast<std::size_t>(pair_type[p]);
    const double *vt = v + t * s.channels;
    const double *ut = u + t * s.channels;
    double *o = out + p * s.channels;
    for (std::size_t k = 0; k < s.channels; ++k) {
      const double sd = std::max(sigma[k], s.sigma_floor);
      o[k] = gaussian_density(vt[k] * dist[p] + ut[k] - mu[k], sd);
    }
  }
}

void gaussian_pair_backward(const GaussianShape &s, const double *d_out,
                            const double *dist, const std::int32_t *pair_type,
                            const double *v, const double *u, const double *mu,
                            const double *sigma, double *d_v, double *d_u,
                            double *d_mu, double *d_sigma) {
  // one channel per task: every parameter gradient entry has a single writer
  const auto channels = static_cast<std::ptrdiff_t>(s.channels);
  const std::size_t pairs = s.n * s.n;
#pragma omp parallel for schedule(static) if (pairs * s.channels >= kMinParallelWork / 8)
  for (std::ptrdiff_t kk = 0; kk < channels; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const bool floored = sigma[k] < s.sigma_floor;
    const double sd = floored ? s.sigma_floor : sigma[k];
    double acc_mu = 0.0;
    double acc_sigma = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t t = static_cast<std::size_t>(pair_type[p]);
      const double x = v[t * s.channels + k] * dist[p] + u[t * s.channels + k] - mu[k];
      const double g = gaussian_density(x, sd) * d_out[p * s.channels + k];
      const double dx = -x / (sd * sd) * g;
      if (d_v) d_v[t * s.channels + k] += dx * dist[p];
      if (d_u) d_u[t * s.channels + k] += dx;
      acc_mu -= dx;
      acc_sigma += g * (x * x / (sd * sd * sd) - 1.0 / sd);
    }
    if (d_mu) d_mu[k] += acc_mu;
    if (d_sigma && !floored) d_sigma[k] += acc_sigma;
  }
}

}  // namespace omp

// ---------------------------------------------------------------------------
// dispatch

#define MMP_DISPATCH(call) \
  (backend() == Backend::kSerial ? serial::call : omp::call)

void gemm(const GemmShape &s, const double *a, const double *b, double *c,
          bool accumulate) {
  MMP_DISPATCH(gemm(s, a, b, c, accumulate));
}

void attention_scores(const AttentionShape &s, double scale, const double *q,
                      const double *k, const double *bias, double *scores) {
  MMP_DISPATCH(attention_scores(s, scale, q, k, bias, scores));
}

void attention_scores_backward(const AttentionShape &s, double scale,
                               const double *d_scores, const double *q,
                               const double *k, double *d_q, double *d_k) {
  MMP_DISPATCH(attention_scores_backward(s, scale, d_scores, q, k, d_q, d_k));
}

void attend(const AttentionShape &s, const double *scores, const double *v,
            double *probs, double *out) {
  MMP_DISPATCH(attend(s, scores, v, probs, out));
}

void attend_backward(const AttentionShape &s, const double *d_out,
                     const double *probs, const double *v, double *d_scores,
                     double *d_v) {
  MMP_DISPATCH(attend_backward(s, d_out, probs, v, d_scores, d_v));
}

void gaussian_pair(const GaussianShape &s, const double *dist,
                   const std::int32_t *pair_type, const double *v,
                   const double *u, const double *mu, const double *sigma,
                   double *out) {
  MMP_DISPATCH(gaussian_pair(s, dist, pair_type, v, u, mu, sigma, out));
}

void gaussian_pair_backward(const GaussianShape &s, const double *d_out,
                            const double *dist, const std::int32_t *pair_type,
                            const double *v, const double *u, const double *mu,
                            const double *sigma, double *d_v, double *d_u,
                            double *d_mu, double *d_sigma) {
  MMP_DISPATCH(gaussian_pair_backward(s, d_out, dist, pair_type, v, u, mu, sigma,
                                      d_v, d_u, d_mu, d_sigma));
}

#undef MMP_DISPATCH

}  // namespace mmp::kernels
