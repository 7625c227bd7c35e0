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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "distclip/core/error.hpp"
#include "distclip/data/augment.hpp"
#include "distclip/data/sampling.hpp"
#include "distclip/model/config.hpp"
#include "distclip/train/optim.hpp"

namespace distclip {

enum class LossMode { kInfoNceOnly, kCombined };

inline void to_json(nlohmann::json& j, LossMode m) {
  j = m == LossMode::kCombined ? "combined" : "infonce_only";
}

inline void from_json(const nlohmann::json& j, LossMode& m) {
  const std::string s = j.get<std::string>();
  if (s == "combined") {
    m = LossMode::kCombined;
  } else if (s == "infonce_only") {
    m = LossMode::kInfoNceOnly;
  } else {
    throw ValidationError("unknown loss_mode '" + s + "' (expected combined or infonce_only)");
  }
}

struct TrainConfig {
  ModelConfig model;
  AugmentationConfig augmentation;
  EpochSamplingPolicy sampling;  // sampling.seed is replaced by `seed` during training
  std::uint64_t seed = 0;

  std::size_t batch_size = 128;
  double learning_rate = 2.5e-4;
  std::size_t epochs = 200;
  std::size_t warmup_epochs = 10;
  std::array<double, 2> betas{0.9, 0.98};
  double eps = 1e-6;
  double weight_decay = 0.05;

  LossMode loss_mode = LossMode::kCombined;
  double ema_momentum = 0.996;
  double tau_s = 0.1;
  double tau_t = 0.04;
  double center_momentum = 0.9;
  bool centering = true;
  bool distill_raw_sum = false;
  // Keep the gain of the weight-normalized projector layer fixed at its
  // initial value of 1.
  bool freeze_projector_scale = true;

  bool freeze_temperature = false;
  double min_temperature = 0.005;
  double max_temperature = 5.0;

  AdamWOptions adamw() const { return {betas[0], betas[1], eps, weight_decay}; }

  void validate() const {
    model.validate();
    augmentation.validate();
    if (augmentation.global_crop_size != model.vision.image_size) {
      throw ValidationError("augmentation.global_crop_size (" +
                            std::to_string(augmentation.global_crop_size) +
                            ") must equal model.vision.image_size (" +
                            std::to_string(model.vision.image_size) + ")");
    }
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (warmup_epochs > epochs) throw ValidationError("warmup_epochs exceeds epochs");
    if (!(betas[0] >= 0.0 && betas[0] < 1.0 && betas[1] >= 0.0 && betas[1] < 1.0)) {
      throw ValidationError("AdamW betas must lie in [0, 1)");
    }
    if (!(eps > 0.0) || weight_decay < 0.0) throw ValidationError("invalid eps or weight_decay");
    if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) {
      throw ValidationError("ema_momentum must lie in [0, 1]");
    }
    if (!(center_momentum >= 0.0 && center_momentum <= 1.0)) {
      throw ValidationError("center_momentum must lie in [0, 1]");
    }
    if (!(tau_s > 0.0) || !(tau_t > 0.0)) throw ValidationError("temperatures must be positive");
    if (!(min_temperature > 0.0 && min_temperature <= max_temperature)) {
      throw ValidationError("invalid temperature clamp range");
    }
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, model, augmentation, sampling, seed,
                                                batch_size, learning_rate, epochs, warmup_epochs,
                                                betas, eps, weight_decay, loss_mode, ema_momentum,
                                                tau_s, tau_t, center_momentum, centering,
                                                distill_raw_sum, freeze_projector_scale, freeze_temperature,
                                                min_temperature, max_temperature)

/// Reads a JSON config; keys that are absent keep their defaults.
inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  TrainConfig cfg;
  try {
    cfg = nlohmann::json::parse(in).get<TrainConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + path.string() + "': " + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace distclip
