// Copyright 2026 The distclip Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "distclip/autodiff/tape.hpp"

namespace distclip {

struct GradCheckOptions {
  double step = 1e-4;       // central difference half-width
  double tolerance = 1e-3;  // max relative error
  // Denominator floor for the relative error, so entries whose true
  // gradient is (numerically) zero compare on an absolute scale.
  double floor = 1e-6;
};

struct GradCheckResult {
  bool passed = true;
  double max_relative_error = 0.0;
  std::string worst_leaf;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares reverse-mode gradients against central finite differences in
/// 64-bit check mode.
///
/// `build` records a scalar loss on the supplied tape and returns it. Every
/// named gradient leaf is perturbed entry by entry; the tape is replayed
/// rather than rebuilt, so the checked graph is exactly the one that was
/// differentiated.
template <typename Build>
GradCheckResult check_gradients(Build&& build, const GradCheckOptions& options = {}) {
  Tape<double> tape;
  const Var<double> loss = build(tape);
  const GradientMap<double> grads = tape.backward(loss);

  GradCheckResult result;
  for (const auto& [name, leaf] : tape.gradient_leaves()) {
    const Tensor<double> original = leaf.value();
    const Tensor<double>& analytic = grads.at(name);
    Tensor<double> probe = original;
    for (std::size_t i = 0; i < original.size(); ++i) {
      probe[i] = original[i] + options.step;
      tape.set_leaf_value(leaf, probe);
      tape.replay();
      const double plus = tape.value(loss).item();
      probe[i] = original[i] - options.step;
      tape.set_leaf_value(leaf, probe);
      tape.replay();
      const double minus = tape.value(loss).item();
      probe[i] = original[i];

      const double numeric = (plus - minus) / (2.0 * options.step);
      const double err = relative_error(analytic[i], numeric, options.floor);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_leaf = name;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
    tape.set_leaf_value(leaf, original);
  }
  tape.replay();
  result.passed = result.max_relative_error <= options.tolerance;
  return result;
}

}  // namespace distclip
