// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_PARAMS_HPP_
#define MMPOLYMER_PARAMS_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/autodiff.hpp"
#include "mmpolymer/rng.hpp"
#include "mmpolymer/tensor.hpp"

namespace mmp {

// Named trainable tensors. Names are unique and shapes fixed once added;
// iteration order is lexicographic by name.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    bool trainable = true;
  };

  void add(const std::string &name, Tensor value, bool trainable = true);
  bool contains(std::string_view name) const;
  const Tensor &get(std::string_view name) const;
  // Same shape required.
  void set(std::string_view name, Tensor value);
  Tensor &mutable_value(std::string_view name);
  bool trainable(std::string_view name) const;
  // Applies to every parameter whose name starts with `prefix`.
  void set_trainable(std::string_view prefix, bool trainable);
  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  const std::map<std::string, Entry, std::less<>> &entries() const noexcept { return entries_; }

  // Copies every entry of `other` whose name starts with `prefix`.
  void merge(const ParamStore &other, std::string_view prefix = "");

  bool operator==(const ParamStore &other) const;

 private:
  Entry &entry(std::string_view name);
  const Entry &entry(std::string_view name) const;
  std::map<std::string, Entry, std::less<>> entries_;
};

using GradStore = std::map<std::string, Tensor, std::less<>>;

// Binds parameters into one autodiff graph: each name maps to a single leaf
// for the lifetime of the binding, so gradients from every use accumulate in
// one place. Frozen parameters are bound as constants.
class Binding {
 public:
  explicit Binding(const ParamStore &params) : params_(&params) { }

  ad::Var operator[](const std::string &name);
  // Gradients of every bound trainable parameter after ad::backward().
  GradStore gradients() const;
  // Names looked up through this binding.
  std::set<std::string> accessed() const;

 private:
  const ParamStore *params_;
  std::map<std::string, ad::Var, std::less<>> bound_;
};

// Initializers used by the encoders.
Tensor normal_tensor(std::size_t rows, std::size_t cols, double stddev, Rng &rng);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-6;
};

// Bias-corrected Adam. Trainable parameters without an entry in the
// gradient map are stepped with a zero gradient.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) { }

  void step(ParamStore &params, const GradStore &grads);

  std::int64_t steps() const noexcept { return t_; }
  const AdamConfig &config() const noexcept { return config_; }
  const Tensor *first_moment(std::string_view name) const;
  const Tensor *second_moment(std::string_view name) const;

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::map<std::string, Tensor, std::less<>> m_;
  std::map<std::string, Tensor, std::less<>> v_;
};

}  // namespace mmp

#endif  // MMPOLYMER_PARAMS_HPP_
