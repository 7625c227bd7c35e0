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

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "distclip/autodiff/ops.hpp"
#include "distclip/model/params.hpp"

namespace distclip {

/// Binds named model tensors onto a tape on first use.
///
/// A trainable binder registers parameters (they receive gradients); a frozen
/// binder registers constants, which is how the teacher runs without ever
/// entering the student's gradient graph.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Tape<T>& tape, const ModelParams<T>& params, bool trainable = true)
      : tape_(tape), params_(params), trainable_(trainable) {}

  Var<T> operator()(const std::string& name) {
    if (trainable_) return tape_.parameter(name, params_.at(name));
    if (auto it = constants_.find(name); it != constants_.end()) return it->second;
    Var<T> v = tape_.constant(params_.at(name));
    constants_.emplace(name, v);
    return v;
  }

  /// Registers every tensor, so gradients exist for all of them after backward.
  void bind_all() {
    for (const auto& [name, _] : params_.tensors) (*this)(name);
  }

  Tape<T>& tape() { return tape_; }
  const ModelConfig& config() const { return params_.config; }
  const ModelParams<T>& params() const { return params_; }

 private:
  Tape<T>& tape_;
  const ModelParams<T>& params_;
  bool trainable_;
  std::unordered_map<std::string, Var<T>> constants_;
};

/// Per-channel pixel statistics used to standardize inputs (CLIP values).
inline constexpr std::array<double, 3> kPixelMean{0.48145466, 0.4578275, 0.40821073};
inline constexpr std::array<double, 3> kPixelStd{0.26862954, 0.26130258, 0.27577711};

/// Splits a [3 x S x S] image into row-major patches of length 3*p*p
/// (channel-major inside a patch), standardizing each channel.
template <typename T, typename Pixel>
Tensor<T> patchify(const Tensor<Pixel>& image, const VisionEncoderConfig& config) {
  const std::size_t s = config.image_size, p = config.patch_size;
  if (image.shape() != Shape{3, s, s}) {
    throw DimensionError("image shape " + shape_to_string(image.shape()) +
                         " does not match model input " + shape_to_string(Shape{3, s, s}));
  }
  const std::size_t side = s / p;
  Tensor<T> patches(Shape{side * side, config.patch_dim()});
  for (std::size_t py = 0; py < side; ++py) {
    for (std::size_t px = 0; px < side; ++px) {
      auto row = patches.row(py * side + px);
      std::size_t k = 0;
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < p; ++y)
          for (std::size_t x = 0; x < p; ++x)
            row[k++] = static_cast<T>(
                (static_cast<double>(image[(c * s + py * p + y) * s + px * p + x]) -
                 kPixelMean[c]) /
                kPixelStd[c]);
    }
  }
  return patches;
}

namespace detail {

template <typename T>
Var<T> attention(ParamBinder<T>& bind, const std::string& prefix, const Var<T>& x,
                 std::size_t width, std::size_t heads) {
  const std::size_t head_dim = width / heads;
  const T score_scale = T{1} / std::sqrt(static_cast<T>(head_dim));
  const Var<T> qkv = linear(x, bind(prefix + "qkv.weight"), bind(prefix + "qkv.bias"));
  std::vector<Var<T>> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Var<T> q = slice_cols(qkv, h * head_dim, head_dim);
    const Var<T> k = slice_cols(qkv, width + h * head_dim, head_dim);
    const Var<T> v = slice_cols(qkv, 2 * width + h * head_dim, head_dim);
    const Var<T> weights = softmax(scale(matmul_nt(q, k), score_scale), -1, T{1});
    outputs.push_back(matmul(weights, v));
  }
  const Var<T> merged = heads == 1 ? outputs[0] : concat_cols(outputs);
  return linear(merged, bind(prefix + "out.weight"), bind(prefix + "out.bias"));
}

// Pre-norm transformer: x + attn(ln1(x)), then x + mlp(ln2(x)).
template <typename T>
Var<T> transformer(ParamBinder<T>& bind, const std::string& prefix, Var<T> x,
                   std::size_t width, std::size_t depth, std::size_t heads) {
  for (std::size_t b = 0; b < depth; ++b) {
    const std::string p = prefix + ".blocks." + std::to_string(b) + ".";
    const Var<T> h1 = layer_norm(x, bind(p + "ln1.gain"), bind(p + "ln1.bias"));
    x = add(x, attention(bind, p + "attn.", h1, width, heads));
    const Var<T> h2 = layer_norm(x, bind(p + "ln2.gain"), bind(p + "ln2.bias"));
    const Var<T> hidden =
        gelu(linear(h2, bind(p + "mlp.fc1.weight"), bind(p + "mlp.fc1.bias")));
    x = add(x, linear(hidden, bind(p + "mlp.fc2.weight"), bind(p + "mlp.fc2.bias")));
  }
  return x;
}

}  // namespace detail

/// Vision tower: patchify, prepend class token, add positions, transformer,
/// class-token output, linear projection into the shared space. Returns [m].
template <typename T, typename Pixel>
Var<T> encode_image(ParamBinder<T>& bind, const Tensor<Pixel>& image) {
  const VisionEncoderConfig& cfg = bind.config().vision;
  const Var<T> patches = bind.tape().constant(patchify<T>(image, cfg));
  const Var<T> tokens =
      linear(patches, bind("vision.patch_embed.weight"), bind("vision.patch_embed.bias"));
  const Var<T> cls = reshape(bind("vision.class_token"), Shape{1, cfg.width});
  Var<T> x = add(concat_rows<T>({cls, tokens}), bind("vision.pos_embed"));
  x = layer_norm(x, bind("vision.ln_pre.gain"), bind("vision.ln_pre.bias"));
  x = detail::transformer(bind, "vision", x, cfg.width, cfg.depth, cfg.heads);
  const Var<T> pooled =
      layer_norm(slice_rows(x, 0, 1), bind("vision.ln_post.gain"), bind("vision.ln_post.bias"));
  return reshape(matmul_nt(pooled, bind("vision.proj.weight")), Shape{cfg.embed_dim});
}

/// Text tower over token ids (already framed by the tokenizer). Pools the
/// position-0 sentinel token. Returns [m].
template <typename T>
Var<T> encode_text(ParamBinder<T>& bind, const std::vector<std::int32_t>& ids) {
  const TextEncoderConfig& cfg = bind.config().text;
  if (ids.empty()) throw ContractError("encode_text needs at least the sentinel token");
  if (ids.size() > cfg.max_length) {
    throw DimensionError("token sequence of length " + std::to_string(ids.size()) +
                         " exceeds max_length " + std::to_string(cfg.max_length));
  }
  const Var<T> tokens = embedding(bind("text.token_embed"), ids);
  const Var<T> positions = slice_rows(bind("text.pos_embed"), 0, ids.size());
  Var<T> x = detail::transformer(bind, "text", add(tokens, positions), cfg.width, cfg.depth,
                                 cfg.heads);
  const Var<T> pooled = layer_norm(slice_rows(x, 0, 1), bind("text.ln_final.gain"),
                                   bind("text.ln_final.bias"));
  return reshape(matmul_nt(pooled, bind("text.proj.weight")), Shape{cfg.embed_dim});
}

/// Three-layer MLP of the projector: m -> hidden -> hidden -> bottleneck.
template <typename T>
Var<T> project_dino_bottleneck(ParamBinder<T>& bind, const Var<T>& embedding) {
  const std::size_t m = bind.config().embed_dim();
  if (embedding.shape() != Shape{m}) {
    throw DimensionError("project_dino input " + shape_to_string(embedding.shape()) +
                         " vs embed_dim [" + std::to_string(m) + "]");
  }
  const Var<T> x = reshape(embedding, Shape{1, m});
  Var<T> h = gelu(linear(x, bind("dino.fc1.weight"), bind("dino.fc1.bias")));
  h = gelu(linear(h, bind("dino.fc2.weight"), bind("dino.fc2.bias")));
  return reshape(linear(h, bind("dino.fc3.weight"), bind("dino.fc3.bias")),
                 Shape{bind.config().dino.bottleneck_dim});
}

/// l2 normalization followed by the weight-normalized K-way layer.
template <typename T>
Var<T> project_dino_head(ParamBinder<T>& bind, const Var<T>& bottleneck) {
  return weight_norm_linear(l2_normalize(bottleneck), bind("dino.last.direction"),
                            bind("dino.last.scale"));
}

/// Self-distillation projector: embedding [m] -> logits [K].
template <typename T>
Var<T> project_dino(ParamBinder<T>& bind, const Var<T>& embedding) {
  return project_dino_head(bind, project_dino_bottleneck(bind, embedding));
}

}  // namespace distclip
