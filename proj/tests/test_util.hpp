// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_TESTS_TEST_UTIL_HPP_
#define MMPOLYMER_TESTS_TEST_UTIL_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "mmpolymer/conformer.hpp"
#include "mmpolymer/rng.hpp"
#include "mmpolymer/tensor.hpp"

namespace mmp::testing {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Uniform rotation from a random unit quaternion.
inline Mat3 random_rotation(Rng &rng) {
  double q[4];
  double n = 0.0;
  do {
    n = 0.0;
    for (double &x : q) {
      x = rng.normal();
      n += x * x;
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

inline Vec3 apply(const Mat3 &r, const Vec3 &t, const Vec3 &p) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i];
  return out;
}

inline std::vector<Vec3> transform(const Mat3 &r, const Vec3 &t, const std::vector<Vec3> &pts) {
  std::vector<Vec3> out;
  for (const auto &p : pts) out.push_back(apply(r, t, p));
  return out;
}

// Real atoms of random light elements spread in a 6 A box, at least 0.8 A apart.
inline Conformer random_conformer(std::size_t n, Rng &rng) {
  static const char *kSymbols[] = {"C", "N", "O", "F", "S", "Cl"};
  std::vector<std::string> sym;
  std::vector<Vec3> coords;
  while (coords.size() < n) {
    Vec3 p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    bool ok = true;
    for (const auto &q : coords) {
      const double d = std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
      ok &= d > 0.8;
    }
    if (!ok) continue;
    coords.push_back(p);
    sym.emplace_back(kSymbols[rng.index(6)]);
  }
  return make_conformer("random", sym, coords);
}

// Plain nested-vector linear algebra for hand oracles.
namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat mm(const Mat &a, const Mat &b) {
  Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat addb(Mat a, const std::vector<double> &b) {
  for (auto &r : a)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  return a;
}

inline Mat ln(const Mat &x, const std::vector<double> &g, const std::vector<double> &b) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mean = 0.0, var = 0.0;
    for (double v : x[i]) mean += v / x[i].size();
    for (double v : x[i]) var += (v - mean) * (v - mean) / x[i].size();
    for (std::size_t j = 0; j < x[i].size(); ++j) y[i][j] = (x[i][j] - mean) / std::sqrt(var + 1e-5) * g[j] + b[j];
  }
  return y;
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / std::numbers::pi) * (x + 0.044715 * x * x * x)));
}

inline Tensor tensor_of(const Mat &m) {
  Tensor t = Tensor::matrix(m.size(), m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) t(i, j) = m[i][j];
  return t;
}

}  // namespace oracle

}  // namespace mmp::testing

#endif  // MMPOLYMER_TESTS_TEST_UTIL_HPP_
