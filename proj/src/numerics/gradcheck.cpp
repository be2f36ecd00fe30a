// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mmpolymer/rng.hpp"

namespace mmp {

GradCheckReport grad_check(const LossFunction &loss, ParamStore &params,
                           const GradCheckOptions &options) {
  Binding binding(params);
  const ad::Var root = loss(binding);
  ad::backward(root);
  const GradStore analytic = binding.gradients();

  std::vector<std::pair<std::string, std::size_t>> coords;
  for (const auto &[name, entry] : params.entries()) {
    if (!entry.trainable) continue;
    for (std::size_t i = 0; i < entry.value.size(); ++i) coords.emplace_back(name, i);
  }
  if (options.samples > 0 && options.samples < coords.size()) {
    Rng rng(options.seed);
    rng.shuffle(coords);
    coords.resize(options.samples);
  }

  auto evaluate = [&]() {
    Binding b(params);
    return loss(b).item();
  };

  GradCheckReport report;
  for (const auto &[name, index] : coords) {
    double &x = params.mutable_value(name)[index];
    const double saved = x;
    x = saved + options.step;
    const double f_plus = evaluate();
    x = saved - options.step;
    const double f_minus = evaluate();
    x = saved;

    GradCheckEntry e;
    e.name = name;
    e.index = index;
    auto it = analytic.find(name);
    e.analytic = it == analytic.end() ? 0.0 : it->second[index];
    e.numeric = (f_plus - f_minus) / (2.0 * options.step);
    const double denom =
        std::max({std::abs(e.analytic), std::abs(e.numeric), options.scale_floor});
    e.rel_error = std::abs(e.analytic - e.numeric) / denom;
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    if (e.rel_error > options.tolerance) report.passed = false;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace mmp
