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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <variant>

#include "distclip/core/random.hpp"
#include "distclip/core/tensor.hpp"

namespace distclip {

/// Generated fixture image, addressed by seed and side length.
struct SyntheticImage {
  std::uint64_t seed = 0;
  std::size_t size = 32;
  friend bool operator==(const SyntheticImage&, const SyntheticImage&) = default;
};

/// Either a path to a binary PPM or a synthetic descriptor.
using ImageRef = std::variant<std::string, SyntheticImage>;

namespace detail {

inline std::string read_ppm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      tok.push_back(c);
      break;
    }
  }
  while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
  return tok;
}

}  // namespace detail

/// Reads an 8-bit binary PPM (P6) into a [3 x H x W] tensor in [0, 1].
inline Tensor<float> load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  if (detail::read_ppm_token(in) != "P6") {
    throw ParseError("'" + path.string() + "' is not a binary PPM (P6)");
  }
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(detail::read_ppm_token(in));
    h = std::stoul(detail::read_ppm_token(in));
    maxval = std::stoul(detail::read_ppm_token(in));
  } catch (const std::exception&) {
    throw ParseError("malformed PPM header in '" + path.string() + "'");
  }
  if (maxval != 255 || w == 0 || h == 0) {
    throw ParseError("'" + path.string() + "': only 8-bit PPM (maxval 255) is supported");
  }
  std::string bytes(w * h * 3, '\0');
  if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw IoError("truncated pixel data in '" + path.string() + "'");
  }
  Tensor<float> img(Shape{3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        img[(c * h + y) * w + x] =
            static_cast<float>(static_cast<unsigned char>(bytes[(y * w + x) * 3 + c])) / 255.0f;
  return img;
}

inline void save_ppm(const Tensor<float>& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("save_ppm expects [3 x H x W], got " + shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  out << "P6\n" << w << ' ' << h << "\n255\n";
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image[(c * h + y) * w + x], 0.0f, 1.0f);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
      }
}

/// Deterministic fixture image: a two-colour gradient background with three
/// coloured rectangles or discs. Pure function of (seed, size).
inline Tensor<float> synthesize_image(std::uint64_t seed, std::size_t size) {
  if (size < 2) throw DomainError("synthetic image size must be >= 2");
  KeyedStream rng(seed, RngDomain::kSynthetic);
  auto color = [&] {
    return std::array<double, 3>{rng.uniform(), rng.uniform(), rng.uniform()};
  };
  const auto c0 = color();
  const auto c1 = color();
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double dx = std::cos(angle), dy = std::sin(angle);

  struct Shape2D {
    bool disc;
    double cx, cy, rx, ry;
    std::array<double, 3> rgb;
  };
  std::array<Shape2D, 3> shapes{};
  for (auto& s : shapes) {
    s.disc = rng.bernoulli(0.5);
    s.cx = rng.uniform(0.15, 0.85);
    s.cy = rng.uniform(0.15, 0.85);
    s.rx = rng.uniform(0.1, 0.3);
    s.ry = rng.uniform(0.1, 0.3);
    s.rgb = color();
  }

  Tensor<float> img(distclip::Shape{3, size, size});
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (static_cast<double>(x) + 0.5) * inv;
      const double v = (static_cast<double>(y) + 0.5) * inv;
      const double t = std::clamp(0.5 + (u - 0.5) * dx + (v - 0.5) * dy, 0.0, 1.0);
      std::array<double, 3> px{};
      for (int c = 0; c < 3; ++c) px[c] = (1 - t) * c0[c] + t * c1[c];
      for (const auto& s : shapes) {
        const double ex = (u - s.cx) / s.rx, ey = (v - s.cy) / s.ry;
        const bool inside = s.disc ? ex * ex + ey * ey <= 1.0
                                   : std::abs(ex) <= 1.0 && std::abs(ey) <= 1.0;
        if (inside) px = s.rgb;
      }
      for (std::size_t c = 0; c < 3; ++c)
        img[(c * size + y) * size + x] = static_cast<float>(px[c]);
    }
  }
  return img;
}

/// Resolves an image reference; relative paths are taken from `base_dir`.
inline Tensor<float> load_image(const ImageRef& ref, const std::filesystem::path& base_dir = {}) {
  if (const auto* synth = std::get_if<SyntheticImage>(&ref)) {
    return synthesize_image(synth->seed, synth->size);
  }
  std::filesystem::path p = std::get<std::string>(ref);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return load_ppm(p);
}

}  // namespace distclip
