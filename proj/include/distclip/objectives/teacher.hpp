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

#include <string>
#include <vector>

#include "distclip/autodiff/kernels.hpp"
#include "distclip/model/params.hpp"

namespace distclip {

/// EMA teacher: parameters, running center of its logits, and the
/// constants that govern both updates.
template <typename T>
struct TeacherState {
  ModelParams<T> params;
  Tensor<T> center;
  double lambda = 0.996;          // EMA momentum for parameters
  double tau_t = 0.04;            // sharpening temperature
  double center_momentum = 0.9;

  /// Teacher initialized as a copy of the student with a zero center.
  static TeacherState from_student(const ModelParams<T>& student, double lambda, double tau_t,
                                   double center_momentum) {
    TeacherState s{student, Tensor<T>(Shape{student.config.dino.output_dim}), lambda, tau_t,
                   center_momentum};
    s.validate();
    return s;
  }

  void validate() const {
    if (center.shape() != Shape{params.config.dino.output_dim}) {
      throw ContractError("teacher center shape " + shape_to_string(center.shape()) +
                          " does not match K = " + std::to_string(params.config.dino.output_dim));
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("EMA momentum outside [0, 1]");
    if (!(center_momentum >= 0.0 && center_momentum <= 1.0)) {
      throw ContractError("center momentum outside [0, 1]");
    }
    if (!(tau_t > 0.0)) throw DomainError("teacher temperature must be positive");
  }

  friend bool operator==(const TeacherState& a, const TeacherState& b) {
    return a.params == b.params && a.center == b.center && a.lambda == b.lambda &&
           a.tau_t == b.tau_t && a.center_momentum == b.center_momentum;
  }
};

/// Centering and sharpening: softmax((logits - c) / tau_t).
template <typename T>
Tensor<T> teacher_distribution(const Tensor<T>& logits, const TeacherState<T>& state) {
  if (logits.shape() != state.center.shape()) {
    throw DimensionError("teacher logits " + shape_to_string(logits.shape()) + " vs center " +
                         shape_to_string(state.center.shape()));
  }
  Tensor<T> centered = logits;
  for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= state.center[i];
  return kernels::softmax(centered, -1, static_cast<T>(state.tau_t));
}

/// theta_t <- lambda * theta_t + (1 - lambda) * theta_s, elementwise over
/// every tensor.
template <typename T>
void ema_update(TeacherState<T>& teacher, const ModelParams<T>& student) {
  auto& tt = teacher.params.tensors;
  const auto& st = student.tensors;
  if (tt.size() != st.size()) {
    throw ContractError("ema_update: teacher has " + std::to_string(tt.size()) +
                        " tensors, student has " + std::to_string(st.size()));
  }
  for (const auto& [name, s] : st) {
    auto it = tt.find(name);
    if (it == tt.end() || it->second.shape() != s.shape()) {
      throw ContractError("ema_update: structural mismatch at '" + name + "'");
    }
  }
  const T lam = static_cast<T>(teacher.lambda);
  const T rest = T{1} - lam;
  for (auto& [name, t] : tt) {
    auto td = t.data();
    auto sd = st.at(name).data();
    for (std::size_t i = 0; i < td.size(); ++i) td[i] = lam * td[i] + rest * sd[i];
  }
}

/// c <- m * c + (1 - m) * mean over rows of teacher_logits[B x K].
template <typename T>
void update_center(TeacherState<T>& state, const Tensor<T>& teacher_logits) {
  if (teacher_logits.rank() != 2 || teacher_logits.dim(0) == 0) {
    throw ContractError("update_center needs a non-empty [B x K] batch, got " +
                        shape_to_string(teacher_logits.shape()));
  }
  const std::size_t rows = teacher_logits.dim(0), k = teacher_logits.dim(1);
  if (k != state.center.size()) {
    throw DimensionError("update_center logits " + shape_to_string(teacher_logits.shape()) +
                         " vs center " + shape_to_string(state.center.shape()));
  }
  std::vector<T> mean(k, T{0});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < k; ++j) mean[j] += teacher_logits(r, j);
  const T m = static_cast<T>(state.center_momentum);
  for (std::size_t j = 0; j < k; ++j) {
    state.center[j] = m * state.center[j] + (T{1} - m) * (mean[j] / static_cast<T>(rows));
  }
}

/// Entropy (nats) of the average of a set of distributions.
template <typename T>
double mean_distribution_entropy(const std::vector<Tensor<T>>& dists) {
  if (dists.empty()) return 0.0;
  Tensor<double> avg(Shape{dists[0].size()});
  for (const auto& d : dists)
    for (std::size_t i = 0; i < d.size(); ++i) avg[i] += static_cast<double>(d[i]);
  for (double& v : avg.data()) v /= static_cast<double>(dists.size());
  return kernels::entropy(avg);
}

}  // namespace distclip
