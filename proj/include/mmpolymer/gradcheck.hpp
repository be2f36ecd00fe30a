// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_GRADCHECK_HPP_
#define MMPOLYMER_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmpolymer/autodiff.hpp"
#include "mmpolymer/params.hpp"

namespace mmp {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Coordinates sampled across all trainable parameters; 0 checks all.
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  // Denominator floor of the relative error, so coordinates whose true
  // gradient is ~0 are judged by absolute error instead.
  double scale_floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = true;
};

using LossFunction = std::function<ad::Var(Binding &)>;

// Compares the reverse-mode gradient of `loss` with central differences
// (f(x + h) - f(x - h)) / 2h, coordinate by coordinate. Relative error is
// |a - n| / max(|a|, |n|, scale_floor). `params` is restored on return.
GradCheckReport grad_check(const LossFunction &loss, ParamStore &params,
                           const GradCheckOptions &options = {});

}  // namespace mmp

#endif  // MMPOLYMER_GRADCHECK_HPP_
