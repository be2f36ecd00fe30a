// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/params.hpp"

#include <cmath>

#include "mmpolymer/error.hpp"

namespace mmp {

void ParamStore::add(const std::string &name, Tensor value, bool trainable) {
  if (entries_.count(name))
    throw Error(Errc::kConfigError, "parameter '" + name + "' already exists");
  entries_.emplace(name, Entry{std::move(value), trainable});
}

bool ParamStore::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

ParamStore::Entry &ParamStore::entry(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw Error(Errc::kConfigError, "no parameter named '" + std::string(name) + "'");
  return it->second;
}

const ParamStore::Entry &ParamStore::entry(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw Error(Errc::kConfigError, "no parameter named '" + std::string(name) + "'");
  return it->second;
}

const Tensor &ParamStore::get(std::string_view name) const { return entry(name).value; }

void ParamStore::set(std::string_view name, Tensor value) {
  auto &e = entry(name);
  if (!e.value.same_shape(value))
    throw Error(Errc::kShapeMismatch, "parameter '" + std::string(name) + "' has shape " +
                                          shape_string(e.value.shape()));
  e.value = std::move(value);
}

Tensor &ParamStore::mutable_value(std::string_view name) { return entry(name).value; }

bool ParamStore::trainable(std::string_view name) const { return entry(name).trainable; }

void ParamStore::set_trainable(std::string_view prefix, bool trainable) {
  for (auto &[name, e] : entries_)
    if (std::string_view(name).substr(0, prefix.size()) == prefix) e.trainable = trainable;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto &[name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto &[name, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::merge(const ParamStore &other, std::string_view prefix) {
  for (const auto &[name, e] : other.entries_) {
    if (std::string_view(name).substr(0, prefix.size()) != prefix) continue;
    entries_[name] = e;
  }
}

bool ParamStore::operator==(const ParamStore &other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (auto a = entries_.begin(), b = other.entries_.begin(); a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

ad::Var Binding::operator[](const std::string &name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const auto &value = params_->get(name);
  ad::Var v = params_->trainable(name) ? ad::Var::leaf(value) : ad::Var::constant(value);
  bound_.emplace(name, v);
  return v;
}

GradStore Binding::gradients() const {
  GradStore out;
  for (const auto &[name, v] : bound_) {
    if (!v.requires_grad()) continue;
    out.emplace(name, v.grad().empty() ? Tensor(v.value().shape(), 0.0) : v.grad());
  }
  return out;
}

std::set<std::string> Binding::accessed() const {
  std::set<std::string> out;
  for (const auto &[name, v] : bound_) out.insert(name);
  return out;
}

Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev, Rng &rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (auto &v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

void Adam::step(ParamStore &params, const GradStore &grads) {
  for (const auto &[name, g] : grads) {
    if (!params.contains(name))
      throw Error(Errc::kShapeMismatch, "gradient for unknown parameter '" + name + "'");
    if (!params.get(name).same_shape(g))
      throw Error(Errc::kShapeMismatch, "gradient for '" + name + "' has shape " +
                                            shape_string(g.shape()) + ", parameter " +
                                            shape_string(params.get(name).shape()));
  }
  ++t_;
  const auto &c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (const auto &[name, entry] : params.entries()) {
    if (!entry.trainable) continue;
    Tensor &p = params.mutable_value(name);
    auto git = grads.find(name);
    const Tensor *g = git == grads.end() ? nullptr : &git->second;
    auto [mit, m_new] = m_.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [vit, v_new] = v_.try_emplace(name, Tensor(p.shape(), 0.0));
    Tensor &m = mit->second;
    Tensor &v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
    if (!p.all_finite())
      throw Error(Errc::kNumericFailure, "Adam produced non-finite values in '" + name + "'");
  }
}

const Tensor *Adam::first_moment(std::string_view name) const {
  auto it = m_.find(name);
  return it == m_.end() ? nullptr : &it->second;
}

const Tensor *Adam::second_moment(std::string_view name) const {
  auto it = v_.find(name);
  return it == v_.end() ? nullptr : &it->second;
}

}  // namespace mmp
