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

// Tape-free numeric kernels. The differentiable ops in ops.hpp call these for
// their forward values; the teacher branch and the evaluation code call them
// directly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "distclip/core/error.hpp"
#include "distclip/core/tensor.hpp"

namespace distclip::kernels {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kLogClamp = 1e-12;
inline constexpr double kLayerNormEpsilon = 1e-5;

inline void require_matrix(const Shape& s, const char* op) {
  if (s.size() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_to_string(s));
  }
}

/// C = A B for A[m x k], B[k x n].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a.shape(), "matmul");
  require_matrix(b.shape(), "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul inner dimensions differ: " + shape_to_string(a.shape()) +
                         " x " + shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> c(Shape{m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = pa[i * k + p];
      const T* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

/// C = A B^T for A[m x k], B[n x k].
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a.shape(), "matmul_nt");
  require_matrix(b.shape(), "matmul_nt");
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_nt inner dimensions differ: " + shape_to_string(a.shape()) +
                         " x " + shape_to_string(b.shape()) + "^T");
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor<T> c(Shape{m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc{0};
      for (std::size_t p = 0; p < k; ++p) acc += pa[i * k + p] * pb[j * k + p];
      c(i, j) = acc;
    }
  }
  return c;
}

/// C = A^T B for A[k x m], B[k x n].
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a.shape(), "matmul_tn");
  require_matrix(b.shape(), "matmul_tn");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_tn inner dimensions differ: " + shape_to_string(a.shape()) +
                         "^T x " + shape_to_string(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor<T> c(Shape{m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = c.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = pa[p * m + i];
      T* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a.shape(), "transpose");
  Tensor<T> out(Shape{a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
  return out;
}

/// Iteration geometry for "along one axis" reductions.
struct AxisGeometry {
  std::size_t outer = 1, length = 1, inner = 1;
  std::size_t index(std::size_t o, std::size_t l, std::size_t i) const {
    return (o * length + l) * inner + i;
  }
};

inline AxisGeometry axis_geometry(const Shape& shape, int axis) {
  const int rank = static_cast<int>(shape.size());
  if (rank == 0) throw DimensionError("softmax over a rank-0 tensor");
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(shape));
  }
  AxisGeometry g;
  for (int d = 0; d < axis; ++d) g.outer *= shape[d];
  g.length = shape[axis];
  for (int d = axis + 1; d < rank; ++d) g.inner *= shape[d];
  return g;
}

inline void require_positive_temperature(double temperature) {
  if (!(temperature > 0.0)) {
    throw DomainError("temperature must be positive, got " + std::to_string(temperature));
  }
}

/// exp((x - max) / T) normalized along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis, T temperature) {
  require_positive_temperature(static_cast<double>(temperature));
  const AxisGeometry g = axis_geometry(x.shape(), axis);
  Tensor<T> y(x.shape());
  for (std::size_t o = 0; o < g.outer; ++o) {
    for (std::size_t i = 0; i < g.inner; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t l = 0; l < g.length; ++l) mx = std::max(mx, x[g.index(o, l, i)]);
      T total{0};
      for (std::size_t l = 0; l < g.length; ++l) {
        const std::size_t idx = g.index(o, l, i);
        y[idx] = std::exp((x[idx] - mx) / temperature);
        total += y[idx];
      }
      for (std::size_t l = 0; l < g.length; ++l) y[g.index(o, l, i)] /= total;
    }
  }
  return y;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, int axis, T temperature) {
  require_positive_temperature(static_cast<double>(temperature));
  const AxisGeometry g = axis_geometry(x.shape(), axis);
  Tensor<T> y(x.shape());
  for (std::size_t o = 0; o < g.outer; ++o) {
    for (std::size_t i = 0; i < g.inner; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t l = 0; l < g.length; ++l) mx = std::max(mx, x[g.index(o, l, i)]);
      T total{0};
      for (std::size_t l = 0; l < g.length; ++l)
        total += std::exp((x[g.index(o, l, i)] - mx) / temperature);
      const T log_total = std::log(total);
      for (std::size_t l = 0; l < g.length; ++l) {
        const std::size_t idx = g.index(o, l, i);
        y[idx] = (x[idx] - mx) / temperature - log_total;
      }
    }
  }
  return y;
}

/// Row-wise x / max(||x||, eps). A vector is one row.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const std::size_t rows = x.rows(), cols = x.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    T sq{0};
    for (std::size_t c = 0; c < cols; ++c) sq += x[r * cols + c] * x[r * cols + c];
    const T norm = std::max(std::sqrt(sq), static_cast<T>(kNormEpsilon));
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = x[r * cols + c] / norm;
  }
  return y;
}

/// -sum(target * log(max(pred, 1e-12))).
template <typename T>
T cross_entropy_soft(const Tensor<T>& target, const Tensor<T>& pred) {
  if (target.size() != pred.size()) {
    throw DimensionError("cross_entropy_soft length mismatch: " +
                         shape_to_string(target.shape()) + " vs " +
                         shape_to_string(pred.shape()));
  }
  double acc = 0.0;
  const T clamp = static_cast<T>(kLogClamp);
  for (std::size_t i = 0; i < target.size(); ++i) {
    acc -= static_cast<double>(target[i]) * std::log(static_cast<double>(std::max(pred[i], clamp)));
  }
  return static_cast<T>(acc);
}

/// Shannon entropy in nats; zero entries contribute nothing.
template <typename T>
T entropy(const Tensor<T>& p) {
  double acc = 0.0;
  for (T v : p.data())
    if (v > T{0}) acc -= static_cast<double>(v) * std::log(static_cast<double>(v));
  return static_cast<T>(acc);
}

template <typename T>
T gelu(T x) {
  return T{0.5} * x * (T{1} + std::erf(x / std::sqrt(T{2})));
}

template <typename T>
T gelu_derivative(T x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const T cdf = T{0.5} * (T{1} + std::erf(x / std::sqrt(T{2})));
  return cdf + x * static_cast<T>(kInvSqrt2Pi) * std::exp(T{-0.5} * x * x);
}

}  // namespace distclip::kernels
