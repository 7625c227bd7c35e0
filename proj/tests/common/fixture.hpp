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

#include "distclip/data/manifest.hpp"
#include "distclip/train/config.hpp"

namespace distclip::fixture {

inline const std::vector<std::pair<std::string, std::string>>& caption_pairs() {
  static const std::vector<std::pair<std::string, std::string>> pairs{
      {"a busy airport with two runways", "ein belebter Flughafen mit zwei Landebahnen"},
      {"a dense residential area", "ein dichtes Wohngebiet"},
      {"a baseball field next to a road", "ein Baseballfeld neben einer Strasse"},
      {"a parking lot full of cars", "ein Parkplatz voller Autos"},
      {"a large stadium", "ein grosses Stadion"},
      {"a playground surrounded by trees", "ein Spielplatz umgeben von Baeumen"},
      {"a river crossing farmland", "ein Fluss durchquert Ackerland"},
      {"a bridge over a wide river", "eine Bruecke ueber einen breiten Fluss"},
      {"a harbour with many boats", "ein Hafen mit vielen Booten"},
      {"a green forest", "ein gruener Wald"},
      {"an industrial zone with warehouses", "ein Industriegebiet mit Lagerhallen"},
      {"a beach along the sea", "ein Strand am Meer"},
      {"a desert with sand dunes", "eine Wueste mit Sandduenen"},
      {"a church in the town centre", "eine Kirche im Stadtzentrum"},
      {"a golf course with ponds", "ein Golfplatz mit Teichen"},
      {"a railway station", "ein Bahnhof"},
  };
  return pairs;
}

/// 16 synthetic images, each with one English caption and its German
/// translation.
inline std::vector<ImageCaptionRecord> overfit_records(std::size_t image_size) {
  std::vector<ImageCaptionRecord> out;
  const auto& pairs = caption_pairs();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ImageCaptionRecord r;
    r.id = "scene" + std::to_string(i);
    r.image = SyntheticImage{1000 + i, image_size};
    r.captions["en"] = {pairs[i].first};
    r.captions["de"] = {pairs[i].second};
    r.split = Split::kTrain;
    out.push_back(std::move(r));
  }
  return out;
}

/// Tiny model and short schedule for overfitting the 16-pair fixture.
/// Augmentation is milder than the defaults so 16 images can be memorized
/// in a few hundred steps.
inline TrainConfig overfit_config() {
  TrainConfig c;
  c.model.vision = {16, 4, 32, 1, 2, 16};
  c.model.text = {259, 48, 32, 1, 2, 16};
  c.model.dino = {32, 16, 64};
  c.model.init_std = 0.1;
  c.augmentation.global_crop_size = 16;
  c.augmentation.local_crop_size = 8;
  c.augmentation.n_local = 2;
  c.augmentation.global_scale = {0.6, 1.0};
  c.augmentation.local_scale = {0.2, 0.5};
  c.augmentation.jitter_prob = 0.5;
  c.augmentation.jitter_strength = 0.5;
  c.augmentation.grayscale_prob = 0.1;
  c.augmentation.global_blur_prob = {0.5, 0.1};
  c.augmentation.local_blur_prob = 0.3;
  c.augmentation.solarize_prob = 0.1;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  c.epochs = 400;
  c.warmup_epochs = 10;
  c.weight_decay = 0.0;
  c.seed = 7;
  return c;
}

}  // namespace distclip::fixture
