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

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>

#include "distclip/autodiff/tape.hpp"
#include "distclip/model/params.hpp"

namespace distclip {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.05;
};

/// First and second moment estimates plus the number of completed steps.
template <typename T>
struct AdamMoments {
  ParamTree<T> m;
  ParamTree<T> v;
  std::uint64_t step = 0;

  static AdamMoments zeros_like(const ParamTree<T>& params) {
    AdamMoments out;
    for (const auto& [name, t] : params) {
      out.m.emplace(name, Tensor<T>(t.shape()));
      out.v.emplace(name, Tensor<T>(t.shape()));
    }
    return out;
  }

  friend bool operator==(const AdamMoments&, const AdamMoments&) = default;
};

template <typename T>
using ParamPredicate = std::function<bool(const std::string&, const Tensor<T>&)>;

/// Weight decay on matrices and embedding tables only.
template <typename T>
bool decay_matrices_only(const std::string&, const Tensor<T>& t) {
  return t.rank() >= 2;
}

/// One AdamW step with bias-corrected moments and decoupled weight decay:
///   p <- p * (1 - lr * wd);  p <- p - lr * m_hat / (sqrt(v_hat) + eps).
///
/// `decays` selects tensors that receive weight decay (all when empty);
/// `frozen` selects tensors that are left untouched, moments included.
template <typename T>
void adamw_step(ParamTree<T>& params, const GradientMap<T>& grads, AdamMoments<T>& moments,
                double lr, const AdamWOptions& opt, const ParamPredicate<T>& decays = {},
                const ParamPredicate<T>& frozen = {}) {
  if (grads.size() != params.size() || moments.m.size() != params.size() ||
      moments.v.size() != params.size()) {
    throw ContractError("adamw_step: parameter, gradient and moment trees differ in size");
  }
  for (const auto& [name, p] : params) {
    auto g = grads.find(name);
    auto m = moments.m.find(name);
    auto v = moments.v.find(name);
    if (g == grads.end() || m == moments.m.end() || v == moments.v.end() ||
        g->second.shape() != p.shape() || m->second.shape() != p.shape() ||
        v->second.shape() != p.shape()) {
      throw ContractError("adamw_step: structural mismatch at '" + name + "'");
    }
  }
  moments.step += 1;
  const double t = static_cast<double>(moments.step);
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& [name, p] : params) {
    if (frozen && frozen(name, p)) continue;
    const double wd = (!decays || decays(name, p)) ? opt.weight_decay : 0.0;
    auto pd = p.data();
    auto gd = grads.at(name).data();
    auto md = moments.m.at(name).data();
    auto vd = moments.v.at(name).data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double g = static_cast<double>(gd[i]);
      const double mi = opt.beta1 * static_cast<double>(md[i]) + (1.0 - opt.beta1) * g;
      const double vi = opt.beta2 * static_cast<double>(vd[i]) + (1.0 - opt.beta2) * g * g;
      md[i] = static_cast<T>(mi);
      vd[i] = static_cast<T>(vi);
      double x = static_cast<double>(pd[i]) * (1.0 - lr * wd);
      x -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + opt.eps);
      pd[i] = static_cast<T>(x);
    }
  }
}

/// Linear warmup from 0 to base_lr over warmup_steps, then cosine decay to 0
/// at total_steps.
inline double lr_schedule(std::uint64_t step, std::uint64_t total_steps,
                          std::uint64_t warmup_steps, double base_lr) {
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return base_lr;
  const double progress = std::min(
      1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps));
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace distclip
