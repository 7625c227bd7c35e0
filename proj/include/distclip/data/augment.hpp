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
#include <vector>

#include "json.hpp"

#include "distclip/core/random.hpp"
#include "distclip/core/tensor.hpp"
#include "distclip/model/resize.hpp"

namespace distclip {

/// Multi-crop settings. Crop sizes default to a small scale suitable for
/// CPU training; use 224 and 96 for full-size inputs.
struct AugmentationConfig {
  std::size_t global_crop_size = 32;
  std::size_t local_crop_size = 16;
  std::size_t n_global = 2;
  std::size_t n_local = 8;
  std::array<double, 2> global_scale{0.4, 1.0};
  std::array<double, 2> local_scale{0.05, 0.4};
  std::array<double, 2> aspect_ratio{3.0 / 4.0, 4.0 / 3.0};
  double flip_prob = 0.5;
  double jitter_prob = 0.8;
  double jitter_strength = 1.0;  // scales (brightness .4, contrast .4, saturation .2, hue .1)
  double grayscale_prob = 0.2;
  // Blur probability for global views 0 and 1 (later globals reuse the last
  // entry) and for every local view.
  std::array<double, 2> global_blur_prob{1.0, 0.1};
  double local_blur_prob = 0.5;
  std::array<double, 2> blur_sigma{0.1, 2.0};  // pixels
  double solarize_prob = 0.2;  // second global view only
  double solarize_threshold = 0.5;

  void validate() const;

  /// Deterministic full-image crops with every random distortion off.
  static AugmentationConfig disabled(std::size_t global_size, std::size_t local_size,
                                     std::size_t n_local) {
    AugmentationConfig c;
    c.global_crop_size = global_size;
    c.local_crop_size = local_size;
    c.n_local = n_local;
    c.global_scale = {1.0, 1.0};
    c.local_scale = {1.0, 1.0};
    c.aspect_ratio = {1.0, 1.0};
    c.flip_prob = c.jitter_prob = c.grayscale_prob = 0.0;
    c.global_blur_prob = {0.0, 0.0};
    c.local_blur_prob = c.solarize_prob = 0.0;
    return c;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AugmentationConfig, global_crop_size,
                                                local_crop_size, n_global, n_local, global_scale,
                                                local_scale, aspect_ratio, flip_prob, jitter_prob,
                                                jitter_strength, grayscale_prob, global_blur_prob,
                                                local_blur_prob, blur_sigma, solarize_prob,
                                                solarize_threshold)

inline void AugmentationConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError(std::string(what) + " must lie in [0, 1]");
    }
  };
  if (global_crop_size < 2 || local_crop_size < 2) throw ValidationError("crop sizes must be >= 2");
  if (n_global < 2) throw ValidationError("at least 2 global views are required");
  prob(flip_prob, "flip_prob");
  prob(jitter_prob, "jitter_prob");
  prob(grayscale_prob, "grayscale_prob");
  prob(global_blur_prob[0], "global_blur_prob");
  prob(global_blur_prob[1], "global_blur_prob");
  prob(local_blur_prob, "local_blur_prob");
  prob(solarize_prob, "solarize_prob");
  for (const auto& range : {global_scale, local_scale}) {
    if (!(range[0] > 0.0 && range[0] <= range[1] && range[1] <= 1.0)) {
      throw ValidationError("crop scale ranges must satisfy 0 < lo <= hi <= 1");
    }
  }
  if (!(aspect_ratio[0] > 0.0 && aspect_ratio[0] <= aspect_ratio[1])) {
    throw ValidationError("aspect ratio range must satisfy 0 < lo <= hi");
  }
}

/// Views of one image, all at model input size. Global view 0 is the one
/// the contrastive branch consumes.
struct ViewBundle {
  std::vector<Tensor<float>> global_views;
  std::vector<Tensor<float>> local_views;

  std::size_t size() const { return global_views.size() + local_views.size(); }
  const Tensor<float>& first_global() const { return global_views.at(0); }
  /// Global views first, then local views.
  const Tensor<float>& view(std::size_t i) const {
    return i < global_views.size() ? global_views[i] : local_views.at(i - global_views.size());
  }
};

namespace augment {

struct CropBox {
  std::size_t top, left, height, width;
};

/// torchvision-style RandomResizedCrop box selection (10 attempts, then a
/// centred fallback).
inline CropBox random_resized_box(std::size_t h, std::size_t w, std::array<double, 2> scale,
                                  std::array<double, 2> ratio, KeyedStream& rng) {
  const double area = static_cast<double>(h * w);
  const double log_lo = std::log(ratio[0]), log_hi = std::log(ratio[1]);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(scale[0], scale[1]);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const auto cw = static_cast<std::size_t>(std::lround(std::sqrt(target * aspect)));
    const auto ch = static_cast<std::size_t>(std::lround(std::sqrt(target / aspect)));
    if (cw > 0 && cw <= w && ch > 0 && ch <= h) {
      const std::size_t top = rng.below(h - ch + 1);
      const std::size_t left = rng.below(w - cw + 1);
      return {top, left, ch, cw};
    }
  }
  const double in_ratio = static_cast<double>(w) / static_cast<double>(h);
  std::size_t cw = w, ch = h;
  if (in_ratio < ratio[0]) {
    ch = static_cast<std::size_t>(std::lround(static_cast<double>(w) / ratio[0]));
  } else if (in_ratio > ratio[1]) {
    cw = static_cast<std::size_t>(std::lround(static_cast<double>(h) * ratio[1]));
  }
  return {(h - ch) / 2, (w - cw) / 2, ch, cw};
}

inline Tensor<float> crop(const Tensor<float>& img, const CropBox& box) {
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  // The resampler needs at least 2 source pixels per axis.
  const std::size_t ch = std::max<std::size_t>(box.height, 2), cw = std::max<std::size_t>(box.width, 2);
  const std::size_t top = std::min(box.top, h - ch), left = std::min(box.left, w - cw);
  Tensor<float> out(Shape{c, ch, cw});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < ch; ++y)
      for (std::size_t x = 0; x < cw; ++x)
        out[(k * ch + y) * cw + x] = img[(k * h + top + y) * w + left + x];
  return out;
}

inline void clamp_unit(Tensor<float>& img) {
  for (float& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
}

inline void hflip(Tensor<float>& img) {
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < h; ++y) {
      float* row = img.data().data() + (k * h + y) * w;
      std::reverse(row, row + w);
    }
}

inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

inline void grayscale(Tensor<float>& img) {
  const std::size_t n = img.dim(1) * img.dim(2);
  float* p = img.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const float y = luma(p[i], p[n + i], p[2 * n + i]);
    p[i] = p[n + i] = p[2 * n + i] = y;
  }
}

/// Brightness, contrast, saturation, then hue (a rotation of the chroma
/// plane in YIQ space), each with a random factor; clamped after each step.
inline void color_jitter(Tensor<float>& img, double strength, KeyedStream& rng) {
  const std::size_t n = img.dim(1) * img.dim(2);
  float* p = img.data().data();
  const double b = 0.4 * strength, c = 0.4 * strength, s = 0.2 * strength, hue = 0.1 * strength;

  const auto brightness = static_cast<float>(rng.uniform(std::max(0.0, 1 - b), 1 + b));
  for (float& v : img.data()) v *= brightness;
  clamp_unit(img);

  const auto contrast = static_cast<float>(rng.uniform(std::max(0.0, 1 - c), 1 + c));
  float mean = 0.0f;
  for (std::size_t i = 0; i < n; ++i) mean += luma(p[i], p[n + i], p[2 * n + i]);
  mean /= static_cast<float>(n);
  for (float& v : img.data()) v = contrast * v + (1 - contrast) * mean;
  clamp_unit(img);

  const auto saturation = static_cast<float>(rng.uniform(std::max(0.0, 1 - s), 1 + s));
  for (std::size_t i = 0; i < n; ++i) {
    const float y = luma(p[i], p[n + i], p[2 * n + i]);
    for (int k = 0; k < 3; ++k) p[k * n + i] = saturation * p[k * n + i] + (1 - saturation) * y;
  }
  clamp_unit(img);

  const double theta = rng.uniform(-hue, hue) * 2.0 * 3.14159265358979323846;
  const auto cs = static_cast<float>(std::cos(theta)), sn = static_cast<float>(std::sin(theta));
  for (std::size_t i = 0; i < n; ++i) {
    const float r = p[i], g = p[n + i], bl = p[2 * n + i];
    const float y = 0.299f * r + 0.587f * g + 0.114f * bl;
    const float ci = 0.596f * r - 0.274f * g - 0.322f * bl;
    const float cq = 0.211f * r - 0.523f * g + 0.312f * bl;
    const float i2 = cs * ci - sn * cq, q2 = sn * ci + cs * cq;
    p[i] = y + 0.956f * i2 + 0.621f * q2;
    p[n + i] = y - 0.272f * i2 - 0.647f * q2;
    p[2 * n + i] = y - 1.106f * i2 + 1.703f * q2;
  }
  clamp_unit(img);
}

/// Separable Gaussian blur with border clamping; radius ceil(3 sigma).
inline void gaussian_blur(Tensor<float>& img, double sigma) {
  const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  std::vector<float> tmp(h * w);
  for (std::size_t k = 0; k < c; ++k) {
    float* p = img.data().data() + k * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const long xx = std::clamp(static_cast<long>(x) + i, 0L, static_cast<long>(w) - 1);
          acc += kernel[i + radius] * p[y * w + static_cast<std::size_t>(xx)];
        }
        tmp[y * w + x] = static_cast<float>(acc);
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const long yy = std::clamp(static_cast<long>(y) + i, 0L, static_cast<long>(h) - 1);
          acc += kernel[i + radius] * tmp[static_cast<std::size_t>(yy) * w + x];
        }
        p[y * w + x] = static_cast<float>(acc);
      }
  }
}

inline void solarize(Tensor<float>& img, double threshold) {
  for (float& v : img.data())
    if (v >= threshold) v = 1.0f - v;
}

/// Photometric distortions shared by global and local views.
inline void distort(Tensor<float>& view, const AugmentationConfig& cfg, double blur_prob,
                    bool allow_solarize, KeyedStream& rng) {
  if (rng.bernoulli(cfg.flip_prob)) hflip(view);
  if (rng.bernoulli(cfg.jitter_prob)) color_jitter(view, cfg.jitter_strength, rng);
  if (rng.bernoulli(cfg.grayscale_prob)) grayscale(view);
  if (rng.bernoulli(blur_prob)) gaussian_blur(view, rng.uniform(cfg.blur_sigma[0], cfg.blur_sigma[1]));
  if (allow_solarize && rng.bernoulli(cfg.solarize_prob)) solarize(view, cfg.solarize_threshold);
  clamp_unit(view);
}

}  // namespace augment

/// Builds the multi-crop bundle for one image.
///
/// Each view v draws from `stream.with_last(v)`, so a view depends only on
/// the stream address and its index. Local crops are resized to the local
/// size, distorted, then brought back up to the global size with bicubic
/// interpolation.
inline ViewBundle make_views(const Tensor<float>& image, const AugmentationConfig& cfg,
                             const KeyedStream& stream) {
  cfg.validate();
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("make_views expects [3 x H x W], got " + shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (h < cfg.local_crop_size || w < cfg.local_crop_size) {
    throw DimensionError("image " + shape_to_string(image.shape()) +
                         " is smaller than the local crop size " +
                         std::to_string(cfg.local_crop_size));
  }
  ViewBundle bundle;
  for (std::size_t g = 0; g < cfg.n_global; ++g) {
    KeyedStream rng = stream.with_last(static_cast<std::uint32_t>(g));
    const auto box = augment::random_resized_box(h, w, cfg.global_scale, cfg.aspect_ratio, rng);
    Tensor<float> view =
        resize_bicubic(augment::crop(image, box), cfg.global_crop_size, cfg.global_crop_size);
    augment::clamp_unit(view);
    const double blur = cfg.global_blur_prob[std::min<std::size_t>(g, 1)];
    augment::distort(view, cfg, blur, g == 1, rng);
    bundle.global_views.push_back(std::move(view));
  }
  for (std::size_t l = 0; l < cfg.n_local; ++l) {
    KeyedStream rng = stream.with_last(static_cast<std::uint32_t>(cfg.n_global + l));
    const auto box = augment::random_resized_box(h, w, cfg.local_scale, cfg.aspect_ratio, rng);
    Tensor<float> view =
        resize_bicubic(augment::crop(image, box), cfg.local_crop_size, cfg.local_crop_size);
    augment::clamp_unit(view);
    augment::distort(view, cfg, cfg.local_blur_prob, false, rng);
    view = resize_bicubic(view, cfg.global_crop_size);
    augment::clamp_unit(view);
    bundle.local_views.push_back(std::move(view));
  }
  return bundle;
}

}  // namespace distclip
