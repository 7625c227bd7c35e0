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

#include <cstddef>
#include <string>

#include "json.hpp"

#include "distclip/core/error.hpp"

namespace distclip {

// Defaults are desk scale. A ViT-B/32-sized setup is
// {224, 32, 768, 12, 12, 512}.
struct VisionEncoderConfig {
  std::size_t image_size = 32;
  std::size_t patch_size = 8;
  std::size_t width = 64;
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t embed_dim = 32;

  std::size_t patches_per_side() const { return image_size / patch_size; }
  /// Patch tokens plus the class token.
  std::size_t sequence_length() const { return patches_per_side() * patches_per_side() + 1; }
  std::size_t patch_dim() const { return 3 * patch_size * patch_size; }

  void validate() const {
    if (patch_size == 0 || image_size == 0 || image_size % patch_size != 0) {
      throw ValidationError("vision image_size " + std::to_string(image_size) +
                            " is not divisible by patch_size " + std::to_string(patch_size));
    }
    if (heads == 0 || width == 0 || width % heads != 0) {
      throw ValidationError("vision width " + std::to_string(width) +
                            " is not divisible by heads " + std::to_string(heads));
    }
    if (embed_dim == 0) throw ValidationError("vision embed_dim must be >= 1");
  }
};

struct TextEncoderConfig {
  std::size_t vocab_size = 259;  // 256 byte values + pad/sentinel/end
  std::size_t max_length = 64;
  std::size_t width = 64;
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t embed_dim = 32;

  void validate() const {
    if (max_length < 1) throw ValidationError("text max_length must be >= 1");
    if (heads == 0 || width == 0 || width % heads != 0) {
      throw ValidationError("text width " + std::to_string(width) +
                            " is not divisible by heads " + std::to_string(heads));
    }
    if (vocab_size == 0 || embed_dim == 0) {
      throw ValidationError("text vocab_size and embed_dim must be >= 1");
    }
  }
};

// Full-size DINO head: hidden 2048, bottleneck 256, output 65536.
struct DinoProjectorConfig {
  std::size_t hidden_dim = 128;
  std::size_t bottleneck_dim = 64;
  std::size_t output_dim = 256;

  void validate() const {
    if (hidden_dim < 1 || bottleneck_dim < 1 || output_dim < 1) {
      throw ValidationError("projector dimensions must all be >= 1");
    }
  }
};

struct ModelConfig {
  VisionEncoderConfig vision;
  TextEncoderConfig text;
  DinoProjectorConfig dino;
  double init_std = 0.02;  // truncated at two standard deviations

  std::size_t embed_dim() const { return vision.embed_dim; }

  void validate() const {
    vision.validate();
    text.validate();
    dino.validate();
    if (!(init_std > 0.0)) throw ValidationError("init_std must be positive");
    if (vision.embed_dim != text.embed_dim) {
      throw ValidationError("vision and text embed_dim differ: " +
                            std::to_string(vision.embed_dim) + " vs " +
                            std::to_string(text.embed_dim));
    }
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VisionEncoderConfig, image_size, patch_size,
                                                width, depth, heads, embed_dim)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TextEncoderConfig, vocab_size, max_length, width,
                                                depth, heads, embed_dim)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DinoProjectorConfig, hidden_dim, bottleneck_dim,
                                                output_dim)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, vision, text, dino, init_std)

}  // namespace distclip
