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
#include <string>
#include <vector>

#include "distclip/data/tokenizer.hpp"
#include "distclip/model/encoders.hpp"
#include "distclip/model/resize.hpp"

namespace distclip {

/// Brings an image to the encoder's input size (bicubic, clamped to [0, 1]).
inline Tensor<float> fit_image(const Tensor<float>& image, std::size_t size) {
  if (image.rank() == 3 && image.dim(1) == size && image.dim(2) == size) return image;
  Tensor<float> out = resize_bicubic(image, size);
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

/// Inference-only image embeddings, one row per image.
template <typename T>
Tensor<float> embed_images(const ModelParams<T>& params, const std::vector<Tensor<float>>& images) {
  const std::size_t m = params.config.embed_dim();
  Tensor<float> out(Shape{images.size(), m});
  for (std::size_t i = 0; i < images.size(); ++i) {
    Tape<T> tape;
    ParamBinder<T> bind(tape, params, false);
    const Tensor<T>& e =
        encode_image(bind, fit_image(images[i], params.config.vision.image_size)).value();
    for (std::size_t j = 0; j < m; ++j) out(i, j) = static_cast<float>(e[j]);
  }
  return out;
}

/// Inference-only text embeddings, one row per string.
template <typename T>
Tensor<float> embed_texts(const ModelParams<T>& params, const std::vector<std::string>& texts) {
  const std::size_t m = params.config.embed_dim();
  Tensor<float> out(Shape{texts.size(), m});
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Tape<T> tape;
    ParamBinder<T> bind(tape, params, false);
    const Tensor<T>& e = encode_text(bind, tokenize(texts[i], params.config.text.max_length)).value();
    for (std::size_t j = 0; j < m; ++j) out(i, j) = static_cast<float>(e[j]);
  }
  return out;
}

}  // namespace distclip
