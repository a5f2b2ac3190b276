// Copyright (C) 2026 The hoidet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient verification. The scalar function under test is
// rebuilt from scratch on every evaluation so that value-dependent control
// flow (sampling taps, tie breaks, matchings held fixed by the caller) is
// re-resolved consistently.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hoidet/tensor.hpp"

namespace hoidet {

struct GradCheckResult {
  bool ok = true;
  double max_rel_err = 0.0;
  // location of the worst entry, for diagnostics
  int worst_input = -1;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // check at most this many entries per input tensor (0 = all), strided
  // deterministically across the tensor
  std::size_t max_entries_per_input = 0;
};

// `build` must construct a fresh scalar loss from the current leaf values.
// Relative error uses max(1, |numeric|) in the denominator so that entries
// near zero are compared absolutely.
inline GradCheckResult finite_difference_check(
    const std::vector<Tensor>& leaves, const std::function<Tensor()>& build,
    const GradCheckOptions& opt = {}) {
  GradCheckResult res;

  for (const Tensor& leaf : leaves) leaf.node().grad.clear();
  Tensor loss = build();
  if (loss.size() != 1) throw std::invalid_argument("finite_difference_check: loss not scalar");
  loss.backward();

  std::vector<std::vector<Scalar>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& leaf : leaves) {
    if (leaf.node().grad.empty())
      analytic.emplace_back(leaf.size(), Scalar(0));
    else
      analytic.push_back(leaf.node().grad);
  }

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Node& node = leaves[li].node();
    const std::size_t n = node.value.size();
    std::size_t step = 1;
    if (opt.max_entries_per_input > 0 && n > opt.max_entries_per_input)
      step = (n + opt.max_entries_per_input - 1) / opt.max_entries_per_input;
    for (std::size_t i = 0; i < n; i += step) {
      const Scalar saved = node.value[i];
      Scalar fp, fm;
      {
        NoGradGuard ng;
        node.value[i] = saved + opt.epsilon;
        fp = build().item();
        node.value[i] = saved - opt.epsilon;
        fm = build().item();
        node.value[i] = saved;
      }
      const double numeric = double(fp - fm) / (2.0 * opt.epsilon);
      const double ga = double(analytic[li][i]);
      const double rel = std::abs(ga - numeric) / std::max(1.0, std::abs(numeric));
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_input = static_cast<int>(li);
        res.worst_entry = i;
        res.analytic = ga;
        res.numeric = numeric;
      }
    }
  }
  res.ok = res.max_rel_err < opt.tolerance;
  return res;
}

}  // namespace hoidet
