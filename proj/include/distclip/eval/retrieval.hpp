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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "distclip/core/error.hpp"
#include "distclip/core/tensor.hpp"
#include "distclip/objectives/losses.hpp"

namespace distclip {

/// Cosine similarities between Q queries (rows) and G gallery items.
struct SimilarityMatrix {
  Tensor<double> values;

  std::size_t queries() const { return values.dim(0); }
  std::size_t gallery() const { return values.dim(1); }
};

/// Correct gallery indices for each query.
struct GroundTruth {
  std::vector<std::vector<std::size_t>> correct;

  void validate(std::size_t queries, std::size_t gallery) const {
    if (correct.size() != queries) {
      throw ContractError("ground truth covers " + std::to_string(correct.size()) +
                          " queries, similarity matrix has " + std::to_string(queries));
    }
    for (std::size_t q = 0; q < correct.size(); ++q) {
      if (correct[q].empty()) {
        throw ContractError("query " + std::to_string(q) + " has no correct gallery item");
      }
      for (std::size_t g : correct[q]) {
        if (g >= gallery) {
          throw ContractError("query " + std::to_string(q) + ": correct index " +
                              std::to_string(g) + " >= gallery size " + std::to_string(gallery));
        }
      }
    }
  }

  /// One correct item per query: query i matches gallery i.
  static GroundTruth identity(std::size_t n) {
    GroundTruth gt;
    gt.correct.resize(n);
    for (std::size_t i = 0; i < n; ++i) gt.correct[i] = {i};
    return gt;
  }
};

/// Row-wise cosine similarity of two embedding matrices, in double.
template <typename T>
SimilarityMatrix cosine_similarity_matrix(const Tensor<T>& queries, const Tensor<T>& gallery) {
  if (queries.rank() != 2 || gallery.rank() != 2 || queries.cols() != gallery.cols()) {
    throw DimensionError("cosine_similarity_matrix: " + shape_to_string(queries.shape()) + " vs " +
                         shape_to_string(gallery.shape()));
  }
  auto normalized = [](const Tensor<T>& x) {
    Tensor<double> out = x.template cast<double>();
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double n = 0.0;
      for (std::size_t c = 0; c < out.cols(); ++c) n += out(r, c) * out(r, c);
      n = std::max(std::sqrt(n), kernels::kNormEpsilon);
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= n;
    }
    return out;
  };
  const Tensor<double> q = normalized(queries), g = normalized(gallery);
  Tensor<double> sim(Shape{q.rows(), g.rows()});
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < g.rows(); ++j) sim(i, j) = dot(q.row(i), g.row(j));
  return {std::move(sim)};
}

/// Indices of the k largest scores, descending, ties by ascending index.
inline std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  if (scores.empty()) throw ContractError("top-k over an empty gallery");
  if (k > scores.size()) {
    throw DomainError("k = " + std::to_string(k) + " exceeds gallery size " +
                      std::to_string(scores.size()));
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

/// Top-k gallery rows by cosine similarity to `query`.
template <typename T>
std::vector<std::size_t> retrieve_top_k(const Tensor<T>& query, const Tensor<T>& gallery,
                                        std::size_t k) {
  if (gallery.rank() != 2 || gallery.rows() == 0) {
    throw ContractError("retrieve_top_k needs a non-empty [G x m] gallery");
  }
  const SimilarityMatrix sim =
      cosine_similarity_matrix(query.reshaped(Shape{1, query.size()}), gallery);
  return top_k_indices(sim.values.row(0), k);
}

/// Percentage of queries with a correct item among the first k results.
inline double recall_at_k(const SimilarityMatrix& sim, const GroundTruth& gt, std::size_t k) {
  const std::size_t q_count = sim.queries(), g_count = sim.gallery();
  if (k < 1) throw DomainError("recall_at_k needs k >= 1");
  if (k > g_count) {
    throw DomainError("k = " + std::to_string(k) + " exceeds gallery size " +
                      std::to_string(g_count));
  }
  gt.validate(q_count, g_count);
  if (q_count == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < q_count; ++q) {
    const auto row = sim.values.row(q);
    // Rank of gallery item c = number of items ordered before it.
    for (std::size_t c : gt.correct[q]) {
      std::size_t rank = 0;
      for (std::size_t j = 0; j < g_count && rank < k; ++j) {
        if (row[j] > row[c] || (row[j] == row[c] && j < c)) ++rank;
      }
      if (rank < k) {
        ++hits;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(q_count);
}

/// Arithmetic mean of exactly six recall values.
inline double mean_recall(std::span<const double> values) {
  if (values.size() != 6) {
    throw ContractError("mean_recall expects 6 values, got " + std::to_string(values.size()));
  }
  double total = 0.0;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 100.0)) throw DomainError("recall value outside [0, 100]");
    total += v;
  }
  return total / 6.0;
}

inline double mean_recall(std::initializer_list<double> values) {
  return mean_recall(std::span<const double>(values.begin(), values.size()));
}

struct RetrievalReport {
  double i2t_r1 = 0, i2t_r5 = 0, i2t_r10 = 0;
  double t2i_r1 = 0, t2i_r5 = 0, t2i_r10 = 0;
  double mean_recall = 0;

  std::array<double, 6> recalls() const { return {i2t_r1, i2t_r5, i2t_r10, t2i_r1, t2i_r5, t2i_r10}; }
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

inline nlohmann::json report_to_json(const RetrievalReport& r) {
  return {{"i2t_r1", round2(r.i2t_r1)},   {"i2t_r5", round2(r.i2t_r5)},
          {"i2t_r10", round2(r.i2t_r10)}, {"t2i_r1", round2(r.t2i_r1)},
          {"t2i_r5", round2(r.t2i_r5)},   {"t2i_r10", round2(r.t2i_r10)},
          {"mean_recall", round2(r.mean_recall)}};
}

inline std::string report_csv_header() { return "i2t_r1,i2t_r5,i2t_r10,t2i_r1,t2i_r5,t2i_r10,mR"; }

inline std::string report_csv_row(const RetrievalReport& r) {
  std::string out;
  char buf[32];
  for (double v : r.recalls()) {
    std::snprintf(buf, sizeof buf, "%.2f,", v);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%.2f", r.mean_recall);
  return out + buf;
}

/// Image-caption retrieval in both directions.
///
/// Each caption is a text-to-image query whose only correct answer is its
/// owning image. Each image is an image-to-text query that succeeds when
/// any of its captions ranks in the top k. k is capped at the gallery size,
/// where recall is trivially 100.
template <typename T>
RetrievalReport evaluate_retrieval(const Tensor<T>& image_embeddings,
                                   const Tensor<T>& caption_embeddings,
                                   const std::vector<std::size_t>& caption_owner) {
  const std::size_t n_images = image_embeddings.rows();
  if (caption_owner.size() != caption_embeddings.rows()) {
    throw ContractError("caption_owner has " + std::to_string(caption_owner.size()) +
                        " entries for " + std::to_string(caption_embeddings.rows()) + " captions");
  }
  GroundTruth t2i;
  GroundTruth i2t;
  i2t.correct.resize(n_images);
  for (std::size_t c = 0; c < caption_owner.size(); ++c) {
    t2i.correct.push_back({caption_owner[c]});
    if (caption_owner[c] < n_images) i2t.correct[caption_owner[c]].push_back(c);
  }
  const SimilarityMatrix text_to_image = cosine_similarity_matrix(caption_embeddings, image_embeddings);
  const SimilarityMatrix image_to_text = cosine_similarity_matrix(image_embeddings, caption_embeddings);
  auto at = [](const SimilarityMatrix& s, const GroundTruth& gt, std::size_t k) {
    return recall_at_k(s, gt, std::min(k, s.gallery()));
  };
  RetrievalReport r;
  r.i2t_r1 = at(image_to_text, i2t, 1);
  r.i2t_r5 = at(image_to_text, i2t, 5);
  r.i2t_r10 = at(image_to_text, i2t, 10);
  r.t2i_r1 = at(text_to_image, t2i, 1);
  r.t2i_r5 = at(text_to_image, t2i, 5);
  r.t2i_r10 = at(text_to_image, t2i, 10);
  const auto all = r.recalls();
  r.mean_recall = mean_recall(std::span<const double>(all));
  return r;
}

}  // namespace distclip
