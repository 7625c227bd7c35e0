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

#include "distclip/core/tensor.hpp"

namespace distclip {

/// Keys cubic convolution kernel with a = -0.5 (Catmull-Rom).
inline double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

struct CubicTap {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

// Half-pixel-centre mapping; sample positions outside the source are
// clamped to the border.
inline std::vector<CubicTap> cubic_taps(std::size_t in, std::size_t out) {
  std::vector<CubicTap> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t j = 0; j < out; ++j) {
    const double src = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const long pos = static_cast<long>(base) + k - 1;
      taps[j].index[k] = static_cast<std::size_t>(std::clamp(pos, 0L, static_cast<long>(in) - 1));
      taps[j].weight[k] = cubic_kernel(frac - (k - 1));
    }
  }
  return taps;
}

}  // namespace detail

/// Separable bicubic resize of a [C x H x W] image to [C x out_h x out_w].
inline Tensor<float> resize_bicubic(const Tensor<float>& image, std::size_t out_h,
                                    std::size_t out_w) {
  if (image.rank() != 3) {
    throw DimensionError("resize_bicubic expects [C x H x W], got " +
                         shape_to_string(image.shape()));
  }
  if (out_h < 1 || out_w < 1) throw DomainError("resize target must be >= 1");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h < 2 || w < 2) throw DomainError("resize_bicubic source must be at least 2x2");

  const auto xtaps = detail::cubic_taps(w, out_w);
  const auto ytaps = detail::cubic_taps(h, out_h);
  Tensor<float> out(Shape{c, out_h, out_w});
  std::vector<double> horizontal(h * out_w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* src = image.data().data() + ch * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += xtaps[x].weight[k] * src[y * w + xtaps[x].index[k]];
        horizontal[y * out_w + x] = acc;
      }
    }
    float* dst = out.data().data() + ch * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          acc += ytaps[y].weight[k] * horizontal[ytaps[y].index[k] * out_w + x];
        dst[y * out_w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

/// Square resize: [C x s x s] -> [C x t x t].
inline Tensor<float> resize_bicubic(const Tensor<float>& image, std::size_t target) {
  return resize_bicubic(image, target, target);
}

}  // namespace distclip
