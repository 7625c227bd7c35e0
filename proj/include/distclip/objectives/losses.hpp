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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distclip/autodiff/ops.hpp"

namespace distclip {

/// (a . b) / (||a|| ||b||), each norm guarded below by 1e-12.
template <typename T>
T cosine_similarity(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity length mismatch: [" + std::to_string(a.size()) +
                         "] vs [" + std::to_string(b.size()) + "]");
  }
  const T eps = static_cast<T>(kernels::kNormEpsilon);
  const T na = std::max(std::sqrt(dot(a, a)), eps);
  const T nb = std::max(std::sqrt(dot(b, b)), eps);
  return dot(a, b) / (na * nb);
}

template <typename T>
T cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
  return cosine_similarity<T>(a.data(), b.data());
}

/// Caption embeddings U[N x m], image embeddings V[N x m] (row i of each is
/// a matched pair) and the contrastive temperature tau (a scalar slot).
template <typename T>
struct ContrastiveBatch {
  Var<T> captions;
  Var<T> images;
  Var<T> tau;
};

struct InfoNceParts {
  double text_to_image = 0.0;
  double image_to_text = 0.0;
};

/// Symmetric InfoNCE over cosine similarities.
///
/// Row i of the N x N logit matrix holds sim(u_i, v_j) / tau over images j;
/// text-to-image takes the log-softmax along rows and image-to-text along
/// columns. The loss is the average of both directions and is >= 0.
template <typename T>
Var<T> info_nce_loss(const ContrastiveBatch<T>& batch, InfoNceParts* parts = nullptr) {
  const Shape& us = batch.captions.shape();
  const Shape& vs = batch.images.shape();
  if (us.size() != 2 || vs.size() != 2) {
    throw DimensionError("info_nce_loss expects matrices, got " + shape_to_string(us) + " and " +
                         shape_to_string(vs));
  }
  if (us[0] == 0 || vs[0] == 0) throw ContractError("info_nce_loss: empty batch");
  if (us != vs) {
    throw DimensionError("info_nce_loss caption/image shapes differ: " + shape_to_string(us) +
                         " vs " + shape_to_string(vs));
  }
  if (!(batch.tau.value().item() > T{0})) throw DomainError("info_nce_loss: tau must be > 0");

  const Var<T> sim = matmul_nt(l2_normalize(batch.captions), l2_normalize(batch.images));
  const Var<T> logits = div_scalar(sim, batch.tau);
  const Var<T> t2i = scale(mean(diagonal(log_softmax(logits, 1, T{1}))), T{-1});
  const Var<T> i2t = scale(mean(diagonal(log_softmax(logits, 0, T{1}))), T{-1});
  if (parts) {
    parts->text_to_image = static_cast<double>(t2i.value().item());
    parts->image_to_text = static_cast<double>(i2t.value().item());
  }
  return scale(add(t2i, i2t), T{0.5});
}

/// softmax(logits / tau_s).
template <typename T>
Var<T> student_distribution(const Var<T>& logits, T tau_s) {
  if (!(tau_s > T{0})) {
    throw DomainError("student temperature must be positive, got " + std::to_string(tau_s));
  }
  return softmax(logits, -1, tau_s);
}

/// Teacher distributions per global view (constants) and student
/// distributions per view. Student views [0, teacher.size()) are the same
/// crops the teacher saw, in the same order.
template <typename T>
struct DistributionSet {
  std::vector<Tensor<T>> teacher;
  std::vector<Var<T>> student;
};

enum class PairReduction { kMean, kSum };

/// Number of (teacher view, student view) pairs with x' != x.
inline std::size_t distillation_pair_count(std::size_t global_views, std::size_t total_views) {
  return global_views * (total_views - 1);
}

/// Cross-entropy between every teacher global view and every other student
/// view, averaged over the pairs (or summed with PairReduction::kSum).
template <typename T>
Var<T> self_distillation_loss(const DistributionSet<T>& dists,
                              PairReduction reduction = PairReduction::kMean) {
  if (dists.teacher.size() < 2) {
    throw ContractError("self_distillation_loss needs at least 2 global views, got " +
                        std::to_string(dists.teacher.size()));
  }
  if (dists.student.size() < dists.teacher.size()) {
    throw ContractError("fewer student views than teacher views");
  }
  std::vector<Var<T>> terms;
  terms.reserve(distillation_pair_count(dists.teacher.size(), dists.student.size()));
  for (std::size_t g = 0; g < dists.teacher.size(); ++g) {
    for (std::size_t v = 0; v < dists.student.size(); ++v) {
      if (v == g) continue;
      terms.push_back(cross_entropy_soft(dists.teacher[g], dists.student[v]));
    }
  }
  return reduction == PairReduction::kSum ? add_n(terms) : mean_n(terms);
}

/// (L_infonce + L_selfsuper) / 2. Throws NumericError on non-finite input.
template <typename T>
Var<T> combined_loss(const Var<T>& contrastive, const Var<T>& distillation) {
  const T a = contrastive.value().item();
  const T b = distillation.value().item();
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw NumericError("combined_loss received a non-finite component (" + std::to_string(a) +
                       ", " + std::to_string(b) + ")");
  }
  return scale(add(contrastive, distillation), T{0.5});
}

inline double combined_loss(double contrastive, double distillation) {
  if (!std::isfinite(contrastive) || !std::isfinite(distillation)) {
    throw NumericError("combined_loss received a non-finite component");
  }
  return 0.5 * (contrastive + distillation);
}

}  // namespace distclip
