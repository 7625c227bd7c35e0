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
#include <map>
#include <string>
#include <vector>

#include "distclip/core/random.hpp"
#include "distclip/core/tensor.hpp"
#include "distclip/model/config.hpp"

namespace distclip {

/// Name -> tensor. Ordered so iteration (and serialization) is stable.
template <typename T>
using ParamTree = std::map<std::string, Tensor<T>>;

namespace param_names {
inline constexpr const char* kLogTemperature = "logit.log_temperature";
inline constexpr const char* kProjectorScale = "dino.last.scale";
}

inline constexpr double kInitTemperature = 0.07;  // 1/tau ~= 14.3

/// Complete parameter set of one encoder stack: vision tower, text tower,
/// both projections into the shared space, the self-distillation projector
/// and the learnable contrastive log-temperature.
template <typename T>
struct ModelParams {
  ModelConfig config;
  ParamTree<T> tensors;

  const Tensor<T>& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }

  T temperature() const { return std::exp(at(param_names::kLogTemperature)[0]); }

  bool all_finite() const {
    for (const auto& [_, t] : tensors)
      if (!t.all_finite()) return false;
    return true;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out{config, {}};
    for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.template cast<U>());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors) n += t.size();
    return n;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.tensors == b.tensors;
  }
};

namespace detail {

enum class InitKind { kNormal, kZeros, kOnes };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init;
};

inline void transformer_specs(std::vector<ParamSpec>& out, const std::string& prefix,
                              std::size_t width, std::size_t depth) {
  for (std::size_t b = 0; b < depth; ++b) {
    const std::string p = prefix + ".blocks." + std::to_string(b) + ".";
    out.push_back({p + "ln1.gain", {width}, InitKind::kOnes});
    out.push_back({p + "ln1.bias", {width}, InitKind::kZeros});
    out.push_back({p + "attn.qkv.weight", {3 * width, width}, InitKind::kNormal});
    out.push_back({p + "attn.qkv.bias", {3 * width}, InitKind::kZeros});
    out.push_back({p + "attn.out.weight", {width, width}, InitKind::kNormal});
    out.push_back({p + "attn.out.bias", {width}, InitKind::kZeros});
    out.push_back({p + "ln2.gain", {width}, InitKind::kOnes});
    out.push_back({p + "ln2.bias", {width}, InitKind::kZeros});
    out.push_back({p + "mlp.fc1.weight", {4 * width, width}, InitKind::kNormal});
    out.push_back({p + "mlp.fc1.bias", {4 * width}, InitKind::kZeros});
    out.push_back({p + "mlp.fc2.weight", {width, 4 * width}, InitKind::kNormal});
    out.push_back({p + "mlp.fc2.bias", {width}, InitKind::kZeros});
  }
}

inline std::vector<ParamSpec> model_specs(const ModelConfig& c) {
  std::vector<ParamSpec> s;
  const auto& v = c.vision;
  s.push_back({"vision.patch_embed.weight", {v.width, v.patch_dim()}, InitKind::kNormal});
  s.push_back({"vision.patch_embed.bias", {v.width}, InitKind::kZeros});
  s.push_back({"vision.class_token", {v.width}, InitKind::kNormal});
  s.push_back({"vision.pos_embed", {v.sequence_length(), v.width}, InitKind::kNormal});
  s.push_back({"vision.ln_pre.gain", {v.width}, InitKind::kOnes});
  s.push_back({"vision.ln_pre.bias", {v.width}, InitKind::kZeros});
  transformer_specs(s, "vision", v.width, v.depth);
  s.push_back({"vision.ln_post.gain", {v.width}, InitKind::kOnes});
  s.push_back({"vision.ln_post.bias", {v.width}, InitKind::kZeros});
  s.push_back({"vision.proj.weight", {v.embed_dim, v.width}, InitKind::kNormal});

  const auto& t = c.text;
  s.push_back({"text.token_embed", {t.vocab_size, t.width}, InitKind::kNormal});
  s.push_back({"text.pos_embed", {t.max_length, t.width}, InitKind::kNormal});
  transformer_specs(s, "text", t.width, t.depth);
  s.push_back({"text.ln_final.gain", {t.width}, InitKind::kOnes});
  s.push_back({"text.ln_final.bias", {t.width}, InitKind::kZeros});
  s.push_back({"text.proj.weight", {t.embed_dim, t.width}, InitKind::kNormal});

  const auto& d = c.dino;
  s.push_back({"dino.fc1.weight", {d.hidden_dim, v.embed_dim}, InitKind::kNormal});
  s.push_back({"dino.fc1.bias", {d.hidden_dim}, InitKind::kZeros});
  s.push_back({"dino.fc2.weight", {d.hidden_dim, d.hidden_dim}, InitKind::kNormal});
  s.push_back({"dino.fc2.bias", {d.hidden_dim}, InitKind::kZeros});
  s.push_back({"dino.fc3.weight", {d.bottleneck_dim, d.hidden_dim}, InitKind::kNormal});
  s.push_back({"dino.fc3.bias", {d.bottleneck_dim}, InitKind::kZeros});
  s.push_back({"dino.last.direction", {d.output_dim, d.bottleneck_dim}, InitKind::kNormal});
  s.push_back({"dino.last.scale", {d.output_dim}, InitKind::kOnes});
  return s;
}

}  // namespace detail

/// Deterministic initialization: a pure function of (config, seed).
///
/// Each tensor draws from its own stream keyed by the parameter name, so
/// adding a parameter never shifts the values of the others.
template <typename T = float>
ModelParams<T> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams<T> params{config, {}};
  for (const auto& spec : detail::model_specs(config)) {
    Tensor<T> t(spec.shape);
    switch (spec.init) {
      case detail::InitKind::kZeros:
        break;
      case detail::InitKind::kOnes:
        for (T& v : t.data()) v = T{1};
        break;
      case detail::InitKind::kNormal: {
        const std::uint64_t h = stable_hash(spec.name);
        KeyedStream rng(seed, RngDomain::kInit, static_cast<std::uint32_t>(h),
                        static_cast<std::uint32_t>(h >> 32));
        for (T& v : t.data()) v = static_cast<T>(rng.truncated_normal(config.init_std));
        break;
      }
    }
    params.tensors.emplace(spec.name, std::move(t));
  }
  params.tensors.emplace(param_names::kLogTemperature,
                         Tensor<T>::scalar(static_cast<T>(std::log(kInitTemperature))));
  return params;
}

}  // namespace distclip
