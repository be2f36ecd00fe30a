// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "mmpolymer/error.hpp"
#include "mmpolymer/kernels.hpp"

namespace mmp::ad {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor &Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

namespace {

constexpr double kProbClamp = 1e-12;

void require(bool cond, const char *op, const std::string &detail) {
  if (!cond) throw Error(Errc::kShapeMismatch, std::string(op) + ": " + detail);
}

std::string dims(const Tensor &t) { return shape_string(t.shape()); }

void require_matrix(const Var &v, const char *op) {
  require(v.defined(), op, "undefined input");
  require(v.value().rank() == 2, op, "expected a matrix, got " + dims(v.value()));
}

// Creates the output node; the closure is only kept if a gradient can flow.
Var make(Tensor value, std::vector<NodePtr> inputs, std::function<void(Node &)> fn,
         const char *op) {
  if (!value.all_finite())
    throw Error(Errc::kNumericFailure, std::string(op) + " produced a non-finite value");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const NodePtr &n) { return n->requires_grad; });
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

bool wants(const NodePtr &n) { return n->requires_grad; }

}  // namespace

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void backward(const Var &root) {
  require(root.defined() && root.value().size() == 1, "backward", "root must be a scalar");
  if (!root.requires_grad()) return;

  // iterative post-order DFS
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto &[n, k] = stack.back();
    if (k < n->inputs.size()) {
      Node *child = n->inputs[k++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

// ---------------------------------------------------------------------------
// elementwise

Var add(const Var &a, const Var &b) {
  require(a.value().same_shape(b.value()), "add", dims(a.value()) + " vs " + dims(b.value()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make(std::move(out), {a.node(), b.node()}, [](Node &self) {
    for (auto &in : self.inputs) {
      if (!wants(in)) continue;
      auto &g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  }, "add");
}

Var sub(const Var &a, const Var &b) {
  require(a.value().same_shape(b.value()), "sub", dims(a.value()) + " vs " + dims(b.value()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make(std::move(out), {a.node(), b.node()}, [](Node &self) {
    const double sign[2] = {1.0, -1.0};
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants(self.inputs[k])) continue;
      auto &g = self.inputs[k]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign[k] * self.grad[i];
    }
  }, "sub");
}

Var mul(const Var &a, const Var &b) {
  require(a.value().same_shape(b.value()), "mul", dims(a.value()) + " vs " + dims(b.value()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make(std::move(out), {a.node(), b.node()}, [](Node &self) {
    const auto &av = self.inputs[0]->value;
    const auto &bv = self.inputs[1]->value;
    if (wants(self.inputs[0])) {
      auto &g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self.inputs[1])) {
      auto &g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  }, "mul");
}

Var scale(const Var &a, double factor) {
  Tensor out = a.value();
  for (auto &v : out.values()) v *= factor;
  return make(std::move(out), {a.node()}, [factor](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  }, "scale");
}

Var add_n(std::span<const Var> terms) {
  require(!terms.empty(), "add_n", "no terms");
  Tensor out = terms[0].value();
  std::vector<NodePtr> inputs{terms[0].node()};
  for (std::size_t t = 1; t < terms.size(); ++t) {
    require(terms[t].value().same_shape(out), "add_n", "shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += terms[t].value()[i];
    inputs.push_back(terms[t].node());
  }
  return make(std::move(out), std::move(inputs), [](Node &self) {
    for (auto &in : self.inputs) {
      if (!wants(in)) continue;
      auto &g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  }, "add_n");
}

Var add_row(const Var &x, const Var &bias) {
  require_matrix(x, "add_row");
  const std::size_t m = x.rows(), n = x.cols();
  require(bias.value().size() == n, "add_row", "bias " + dims(bias.value()) + " for " + dims(x.value()));
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.value()[j];
  return make(std::move(out), {x.node(), bias.node()}, [m, n](Node &self) {
    if (wants(self.inputs[0])) {
      auto &g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self.inputs[1])) {
      auto &g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  }, "add_row");
}

Var matmul(const Var &a, const Var &b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  require(b.rows() == k, "matmul", dims(a.value()) + " x " + dims(b.value()));
  Tensor out = Tensor::matrix(m, n);
  kernels::gemm({m, n, k}, a.value().data(), b.value().data(), out.data(), false);
  return make(std::move(out), {a.node(), b.node()}, [m, n, k](Node &self) {
    const auto &av = self.inputs[0]->value;
    const auto &bv = self.inputs[1]->value;
    if (wants(self.inputs[0])) {
      // dA += dC B^T
      kernels::gemm({m, k, n, false, true}, self.grad.data(), bv.data(),
                    self.inputs[0]->grad_buffer().data(), true);
    }
    if (wants(self.inputs[1])) {
      // dB += A^T dC
      kernels::gemm({k, n, m, true, false}, av.data(), self.grad.data(),
                    self.inputs[1]->grad_buffer().data(), true);
    }
  }, "matmul");
}

Var transpose(const Var &a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  return make(std::move(out), {a.node()}, [m, n](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  }, "transpose");
}

Var sum(const Var &a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return make(Tensor::scalar(s), {a.node()}, [](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (auto &v : g.values()) v += self.grad[0];
  }, "sum");
}

Var mean(const Var &a) {
  require(a.value().size() > 0, "mean", "empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// ---------------------------------------------------------------------------
// activations

Var gelu(const Var &x) {
  static const double kC = std::sqrt(2.0 / std::numbers::pi);
  Tensor out = x.value();
  for (auto &v : out.values()) {
    const double t = std::tanh(kC * (v + 0.044715 * v * v * v));
    v = 0.5 * v * (1.0 + t);
  }
  return make(std::move(out), {x.node()}, [](Node &self) {
    const auto &xv = self.inputs[0]->value;
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double t = std::tanh(kC * (v + 0.044715 * v * v * v));
      const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * 0.044715 * v * v);
      g[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  }, "gelu");
}

Var softmax_rows(const Var &x) {
  require_matrix(x, "softmax_rows");
  if (!x.value().all_finite())
    throw Error(Errc::kNumericFailure, "softmax_rows: non-finite input");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    double *r = out.data() + i * n;
    const double mx = *std::max_element(r, r + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (r[j] = std::exp(r[j] - mx));
    for (std::size_t j = 0; j < n; ++j) r[j] /= z;
  }
  return make(std::move(out), {x.node()}, [m, n](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      const double *y = self.value.data() + i * n;
      const double *dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  }, "softmax_rows");
}

Var log_softmax_rows(const Var &x) {
  require_matrix(x, "log_softmax_rows");
  if (!x.value().all_finite())
    throw Error(Errc::kNumericFailure, "log_softmax_rows: non-finite input");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    double *r = out.data() + i * n;
    const double mx = *std::max_element(r, r + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(r[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) r[j] -= lse;
  }
  return make(std::move(out), {x.node()}, [m, n](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      const double *y = self.value.data() + i * n;
      const double *dy = self.grad.data() + i * n;
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += dy[j] - std::exp(y[j]) * total;
    }
  }, "log_softmax_rows");
}

Var layer_norm(const Var &x, const Var &gamma, const Var &beta, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  require(gamma.value().size() == n && beta.value().size() == n, "layer_norm",
          "affine parameters do not match width " + std::to_string(n));
  Tensor out = Tensor::matrix(m, n);
  std::vector<double> xhat(m * n), rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double *r = x.value().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += r[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (r[j] - mu) * rstd[i];
      out[i * n + j] = xhat[i * n + j] * gamma.value()[j] + beta.value()[j];
    }
  }
  return make(std::move(out), {x.node(), gamma.node(), beta.node()},
              [m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Node &self) {
    const auto &gv = self.inputs[1]->value;
    if (wants(self.inputs[0])) {
      auto &g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        double mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double d = self.grad[i * n + j] * gv[j];
          mean_d += d;
          mean_dx += d * xhat[i * n + j];
        }
        mean_d /= static_cast<double>(n);
        mean_dx /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          const double d = self.grad[i * n + j] * gv[j];
          g[i * n + j] += rstd[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
        }
      }
    }
    if (wants(self.inputs[1])) {
      auto &g = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j] * xhat[i * n + j];
    }
    if (wants(self.inputs[2])) {
      auto &g = self.inputs[2]->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  }, "layer_norm");
}

Var l2_normalize_rows(const Var &x) {
  require_matrix(x, "l2_normalize_rows");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += out[i * n + j] * out[i * n + j];
    norms[i] = std::sqrt(s);
    if (norms[i] == 0.0)
      throw Error(Errc::kZeroVector, "cannot normalize zero row " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= norms[i];
  }
  return make(std::move(out), {x.node()}, [m, n, norms = std::move(norms)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      const double *y = self.value.data() + i * n;
      const double *dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += (dy[j] - y[j] * dot) / norms[i];
    }
  }, "l2_normalize_rows");
}

// ---------------------------------------------------------------------------
// indexing

Var embedding(const Var &table, std::span<const int> ids) {
  require_matrix(table, "embedding");
  const std::size_t v = table.rows(), d = table.cols();
  Tensor out = Tensor::matrix(ids.size(), d);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= v)
      throw Error(Errc::kUnknownId, "id " + std::to_string(ids[t]) + " outside table of " +
                                        std::to_string(v) + " rows");
    std::copy_n(table.value().data() + ids[t] * d, d, out.data() + t * d);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return make(std::move(out), {table.node()}, [d, saved = std::move(saved)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t t = 0; t < saved.size(); ++t)
      for (std::size_t c = 0; c < d; ++c) g[saved[t] * d + c] += self.grad[t * d + c];
  }, "embedding");
}

Var gather_rows(const Var &x, std::span<const std::size_t> rows) {
  require_matrix(x, "gather_rows");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::matrix(rows.size(), n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < m, "gather_rows", "row index out of range");
    std::copy_n(x.value().data() + rows[r] * n, n, out.data() + r * n);
  }
  std::vector<std::size_t> saved(rows.begin(), rows.end());
  return make(std::move(out), {x.node()}, [n, saved = std::move(saved)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < saved.size(); ++r)
      for (std::size_t c = 0; c < n; ++c) g[saved[r] * n + c] += self.grad[r * n + c];
  }, "gather_rows");
}

Var row(const Var &x, std::size_t index) {
  const std::size_t idx[1] = {index};
  return gather_rows(x, idx);
}

Var stack_rows(std::span<const Var> parts) {
  require(!parts.empty(), "stack_rows", "no parts");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  std::vector<NodePtr> inputs;
  for (const auto &p : parts) {
    require_matrix(p, "stack_rows");
    require(p.cols() == n, "stack_rows", "column mismatch");
    m += p.rows();
    inputs.push_back(p.node());
  }
  Tensor out = Tensor::matrix(m, n);
  std::size_t offset = 0;
  for (const auto &p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
    offset += p.value().size();
  }
  return make(std::move(out), std::move(inputs), [](Node &self) {
    std::size_t off = 0;
    for (auto &in : self.inputs) {
      const std::size_t sz = in->value.size();
      if (wants(in)) {
        auto &g = in->grad_buffer();
        for (std::size_t i = 0; i < sz; ++i) g[i] += self.grad[off + i];
      }
      off += sz;
    }
  }, "stack_rows");
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no parts");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  std::vector<NodePtr> inputs;
  for (const auto &p : parts) {
    require_matrix(p, "concat_cols");
    require(p.rows() == m, "concat_cols", "row mismatch");
    n += p.cols();
    inputs.push_back(p.node());
  }
  Tensor out = Tensor::matrix(m, n);
  std::size_t c0 = 0;
  for (const auto &p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p.value().data() + i * w, w, out.data() + i * n + c0);
    c0 += w;
  }
  return make(std::move(out), std::move(inputs), [m, n](Node &self) {
    std::size_t c = 0;
    for (auto &in : self.inputs) {
      const std::size_t w = in->value.cols();
      if (wants(in)) {
        auto &g = in->grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * n + c + j];
      }
      c += w;
    }
  }, "concat_cols");
}

Var slice_cols(const Var &x, std::size_t begin, std::size_t count) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.rows(), n = x.cols();
  require(begin + count <= n, "slice_cols", "slice past the last column");
  Tensor out = Tensor::matrix(m, count);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(x.value().data() + i * n + begin, count, out.data() + i * count);
  return make(std::move(out), {x.node()}, [m, n, begin, count](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * n + begin + j] += self.grad[i * count + j];
  }, "slice_cols");
}

// ---------------------------------------------------------------------------
// losses

Var cross_entropy(const Var &probs, std::span<const int> labels) {
  require_matrix(probs, "cross_entropy");
  const std::size_t m = probs.rows(), n = probs.cols();
  require(labels.size() == m, "cross_entropy", "one label per row required");
  if (m == 0) return Var::constant(Tensor::scalar(0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < n, "cross_entropy",
            "label out of range");
    total -= std::log(std::max(probs.value()[i * n + labels[i]], kProbClamp));
  }
  std::vector<int> saved(labels.begin(), labels.end());
  return make(Tensor::scalar(total / static_cast<double>(m)), {probs.node()},
              [m, n, saved = std::move(saved)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    const auto &p = self.inputs[0]->value;
    for (std::size_t i = 0; i < m; ++i) {
      const double pv = p[i * n + saved[i]];
      if (pv > kProbClamp) g[i * n + saved[i]] -= self.grad[0] / (static_cast<double>(m) * pv);
    }
  }, "cross_entropy");
}

Var nll_rows(const Var &log_probs, std::span<const int> labels) {
  require_matrix(log_probs, "nll_rows");
  const std::size_t m = log_probs.rows(), n = log_probs.cols();
  require(labels.size() == m, "nll_rows", "one label per row required");
  if (m == 0) return Var::constant(Tensor::scalar(0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < n, "nll_rows",
            "label out of range");
    total -= log_probs.value()[i * n + labels[i]];
  }
  std::vector<int> saved(labels.begin(), labels.end());
  return make(Tensor::scalar(total / static_cast<double>(m)), {log_probs.node()},
              [m, n, saved = std::move(saved)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      g[i * n + saved[i]] -= self.grad[0] / static_cast<double>(m);
  }, "nll_rows");
}

Var smooth_l1(const Var &pred, const Tensor &target, std::span<const bool> include_rows) {
  require_matrix(pred, "smooth_l1");
  require(pred.value().same_shape(target), "smooth_l1",
          dims(pred.value()) + " vs " + dims(target));
  const std::size_t m = pred.rows(), n = pred.cols();
  require(include_rows.size() == m, "smooth_l1", "include mask length");
  const auto included = static_cast<std::size_t>(
      std::count(include_rows.begin(), include_rows.end(), true));
  if (included == 0) return Var::constant(Tensor::scalar(0.0));
  const double denom = static_cast<double>(included * n);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!include_rows[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::abs(pred.value()[i * n + j] - target[i * n + j]);
      total += e < 1.0 ? 0.5 * e * e : e - 0.5;
    }
  }
  std::vector<bool> mask(include_rows.begin(), include_rows.end());
  return make(Tensor::scalar(total / denom), {pred.node()},
              [m, n, denom, target, mask = std::move(mask)](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    const auto &p = self.inputs[0]->value;
    for (std::size_t i = 0; i < m; ++i) {
      if (!mask[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = p[i * n + j] - target[i * n + j];
        const double d = std::abs(e) < 1.0 ? e : (e > 0 ? 1.0 : -1.0);
        g[i * n + j] += self.grad[0] * d / denom;
      }
    }
  }, "smooth_l1");
}

Var mse(const Var &pred, const Tensor &target) {
  require(pred.value().same_shape(target), "mse", dims(pred.value()) + " vs " + dims(target));
  return mean(mul(sub(pred, Var::constant(target)), sub(pred, Var::constant(target))));
}

Var cosine_similarity(const Var &a, const Var &b) {
  require(a.value().same_shape(b.value()) && a.rows() == 1, "cosine_similarity",
          "two 1 x n rows expected");
  const auto an = l2_normalize_rows(a);
  const auto bn = l2_normalize_rows(b);
  return sum(mul(an, bn));
}

// ---------------------------------------------------------------------------
// attention and geometry

Var attention_scores(const Var &q, const Var &k, std::size_t heads, double scale,
                     const Var &bias) {
  require_matrix(q, "attention_scores");
  require(q.value().same_shape(k.value()), "attention_scores", "Q and K differ in shape");
  const std::size_t n = q.rows(), width = q.cols();
  require(heads > 0 && width % heads == 0, "attention_scores",
          "width " + std::to_string(width) + " not divisible by " + std::to_string(heads));
  const kernels::AttentionShape s{n, heads, width / heads};
  std::vector<NodePtr> inputs{q.node(), k.node()};
  const double *bias_ptr = nullptr;
  if (bias.defined()) {
    require(bias.rows() == n * n && bias.cols() == heads, "attention_scores",
            "bias must be (N*N) x heads, got " + dims(bias.value()));
    bias_ptr = bias.value().data();
    inputs.push_back(bias.node());
  }
  Tensor out = Tensor::matrix(n * n, heads);
  kernels::attention_scores(s, scale, q.value().data(), k.value().data(), bias_ptr, out.data());
  return make(std::move(out), std::move(inputs), [s, scale](Node &self) {
    const auto &qn = self.inputs[0];
    const auto &kn = self.inputs[1];
    kernels::attention_scores_backward(
        s, scale, self.grad.data(), qn->value.data(), kn->value.data(),
        wants(qn) ? qn->grad_buffer().data() : nullptr,
        wants(kn) ? kn->grad_buffer().data() : nullptr);
    if (self.inputs.size() > 2 && wants(self.inputs[2])) {
      auto &g = self.inputs[2]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  }, "attention_scores");
}

Var attend(const Var &scores, const Var &v, std::size_t heads) {
  require_matrix(v, "attend");
  const std::size_t n = v.rows(), width = v.cols();
  require(heads > 0 && width % heads == 0, "attend", "width not divisible by heads");
  require(scores.rows() == n * n && scores.cols() == heads, "attend",
          "scores must be (N*N) x heads, got " + dims(scores.value()));
  const kernels::AttentionShape s{n, heads, width / heads};
  Tensor probs = Tensor::matrix(n * n, heads);
  Tensor out = Tensor::matrix(n, width);
  kernels::attend(s, scores.value().data(), v.value().data(), probs.data(), out.data());
  return make(std::move(out), {scores.node(), v.node()},
              [s, probs = std::move(probs)](Node &self) {
    const auto &sn = self.inputs[0];
    const auto &vn = self.inputs[1];
    Tensor d_scores(probs.shape(), 0.0);
    kernels::attend_backward(s, self.grad.data(), probs.data(), vn->value.data(),
                             d_scores.data(), wants(vn) ? vn->grad_buffer().data() : nullptr);
    if (wants(sn)) {
      auto &g = sn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += d_scores[i];
    }
  }, "attend");
}

Var gaussian_pair(const Tensor &dist, std::span<const std::int32_t> pair_type,
                  const Var &v, const Var &u, const Var &mu, const Var &sigma,
                  double sigma_floor) {
  const std::size_t n = dist.rows();
  require(dist.rank() == 2 && dist.cols() == n, "gaussian_pair", "distance matrix must be square");
  require(pair_type.size() == n * n, "gaussian_pair", "one pair type per atom pair");
  const std::size_t c = mu.value().size();
  require(sigma.value().size() == c && v.cols() == c && u.value().same_shape(v.value()),
          "gaussian_pair", "basis parameter shapes disagree");
  for (auto t : pair_type)
    require(t >= 0 && static_cast<std::size_t>(t) < v.rows(), "gaussian_pair",
            "pair type outside table");
  const kernels::GaussianShape s{n, c, sigma_floor};
  Tensor out = Tensor::matrix(n * n, c);
  kernels::gaussian_pair(s, dist.data(), pair_type.data(), v.value().data(), u.value().data(),
                         mu.value().data(), sigma.value().data(), out.data());
  std::vector<std::int32_t> types(pair_type.begin(), pair_type.end());
  return make(std::move(out), {v.node(), u.node(), mu.node(), sigma.node()},
              [s, dist, types = std::move(types)](Node &self) {
    auto ptr = [&](std::size_t k) {
      return wants(self.inputs[k]) ? self.inputs[k]->grad_buffer().data() : nullptr;
    };
    kernels::gaussian_pair_backward(s, self.grad.data(), dist.data(), types.data(),
                                    self.inputs[0]->value.data(), self.inputs[1]->value.data(),
                                    self.inputs[2]->value.data(), self.inputs[3]->value.data(),
                                    ptr(0), ptr(1), ptr(2), ptr(3));
  }, "gaussian_pair");
}

Var pair_displacement(const Var &weights, const Tensor &coords) {
  const std::size_t n = coords.rows();
  require(coords.rank() == 2 && coords.cols() == 3, "pair_displacement", "coords must be N x 3");
  require(weights.value().size() == n * n, "pair_displacement", "one weight per atom pair");
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor out = coords;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = weights.value()[i * n + j] * inv_n;
      for (std::size_t c = 0; c < 3; ++c) out[i * 3 + c] += w * (coords[i * 3 + c] - coords[j * 3 + c]);
    }
  return make(std::move(out), {weights.node()}, [n, inv_n, coords](Node &self) {
    auto &g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double acc = 0.0;
        for (std::size_t c = 0; c < 3; ++c)
          acc += self.grad[i * 3 + c] * (coords[i * 3 + c] - coords[j * 3 + c]);
        g[i * n + j] += acc * inv_n;
      }
  }, "pair_displacement");
}

}  // namespace mmp::ad
