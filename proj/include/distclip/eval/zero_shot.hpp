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

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "distclip/eval/retrieval.hpp"

namespace distclip {

/// Prompt with exactly one "{class name}" slot.
class ZeroShotTemplate {
 public:
  static constexpr std::string_view kSlot = "{class name}";

  explicit ZeroShotTemplate(std::string text = "a satellite photo of {class name}")
      : text_(std::move(text)) {
    const auto first = text_.find(kSlot);
    if (first == std::string::npos || text_.find(kSlot, first + 1) != std::string::npos) {
      throw ValidationError("zero-shot template must contain exactly one {class name} slot: '" +
                            text_ + "'");
    }
    slot_ = first;
  }

  std::string expand(std::string_view class_name) const {
    std::string out = text_;
    out.replace(slot_, kSlot.size(), class_name);
    return out;
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::size_t slot_ = 0;
};

/// Argmax of cosine similarity between each image row and each class row,
/// ties to the lower class index.
template <typename T>
std::vector<std::size_t> zero_shot_predict(const Tensor<T>& image_embeddings,
                                           const Tensor<T>& class_embeddings) {
  if (class_embeddings.rank() != 2 || class_embeddings.rows() == 0) {
    throw ContractError("zero-shot classification needs at least one class");
  }
  const SimilarityMatrix sim = cosine_similarity_matrix(image_embeddings, class_embeddings);
  std::vector<std::size_t> out(sim.queries());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = top_k_indices(sim.values.row(i), 1)[0];
  return out;
}

/// Embeds every template-expanded class name with `text_encoder` and
/// assigns each image its most similar class.
template <typename T>
std::vector<std::size_t> zero_shot_classify(
    const Tensor<T>& image_embeddings, const std::vector<std::string>& class_names,
    const ZeroShotTemplate& prompt, const std::function<Tensor<T>(const std::string&)>& text_encoder) {
  if (class_names.empty()) throw ContractError("zero-shot classification needs at least one class");
  std::vector<Tensor<T>> rows;
  for (const auto& name : class_names) rows.push_back(text_encoder(prompt.expand(name)));
  const std::size_t m = rows.front().size();
  Tensor<T> classes(Shape{rows.size(), m});
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != m) throw DimensionError("class embeddings differ in length");
    std::copy(rows[c].data().begin(), rows[c].data().end(), classes.data().begin() + c * m);
  }
  return zero_shot_predict(image_embeddings, classes);
}

}  // namespace distclip
