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
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "distclip/autodiff/kernels.hpp"
#include "distclip/autodiff/tape.hpp"

namespace distclip {

namespace detail {

template <typename T>
void accumulate(Tensor<T>* grad, const Tensor<T>& delta) {
  if (!grad) return;
  auto g = grad->data();
  auto d = delta.data();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += d[i];
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + " shape mismatch: " + shape_to_string(a) + " vs " +
                         shape_to_string(b));
  }
}

inline void require_scalar(const Shape& s, const char* op) {
  if (shape_numel(s) != 1) {
    throw DimensionError(std::string(op) + " expects a scalar, got " + shape_to_string(s));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  return a.tape().record(
      {a, b},
      [](auto in) {
        Tensor<T> y = *in[0];
        detail::accumulate(&y, *in[1]);
        return y;
      },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        detail::accumulate(gin[0], gy);
        detail::accumulate(gin[1], gy);
      });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "sub");
  return a.tape().record(
      {a, b},
      [](auto in) {
        Tensor<T> y = *in[0];
        auto yd = y.data();
        auto bd = in[1]->data();
        for (std::size_t i = 0; i < yd.size(); ++i) yd[i] -= bd[i];
        return y;
      },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        detail::accumulate(gin[0], gy);
        if (gin[1]) {
          for (std::size_t i = 0; i < gy.size(); ++i) (*gin[1])[i] -= gy[i];
        }
      });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  return a.tape().record(
      {a, b},
      [](auto in) {
        Tensor<T> y = *in[0];
        for (std::size_t i = 0; i < y.size(); ++i) y[i] *= (*in[1])[i];
        return y;
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) {
          if (gin[0]) (*gin[0])[i] += gy[i] * (*in[1])[i];
          if (gin[1]) (*gin[1])[i] += gy[i] * (*in[0])[i];
        }
      });
}

/// x * c for a constant c.
template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  return x.tape().record(
      {x},
      [c](auto in) {
        Tensor<T> y = *in[0];
        for (T& v : y.data()) v *= c;
        return y;
      },
      [c](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*gin[0])[i] += gy[i] * c;
      });
}

template <typename T>
Var<T> exp(const Var<T>& x) {
  return x.tape().record(
      {x},
      [](auto in) {
        Tensor<T> y = *in[0];
        for (T& v : y.data()) v = std::exp(v);
        return y;
      },
      [](auto, const Tensor<T>& y, const Tensor<T>& gy, auto gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*gin[0])[i] += gy[i] * y[i];
      });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  return x.tape().record(
      {x},
      [](auto in) {
        Tensor<T> y = *in[0];
        for (T& v : y.data()) v = kernels::gelu(v);
        return y;
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (std::size_t i = 0; i < gy.size(); ++i)
          (*gin[0])[i] += gy[i] * kernels::gelu_derivative((*in[0])[i]);
      });
}

/// x * s where s is a scalar slot on the tape.
template <typename T>
Var<T> mul_scalar(const Var<T>& x, const Var<T>& s) {
  detail::require_scalar(s.shape(), "mul_scalar");
  return x.tape().record(
      {x, s},
      [](auto in) {
        Tensor<T> y = *in[0];
        const T sv = (*in[1])[0];
        for (T& v : y.data()) v *= sv;
        return y;
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const T sv = (*in[1])[0];
        T gs{0};
        for (std::size_t i = 0; i < gy.size(); ++i) {
          if (gin[0]) (*gin[0])[i] += gy[i] * sv;
          gs += gy[i] * (*in[0])[i];
        }
        if (gin[1]) (*gin[1])[0] += gs;
      });
}

/// x / s where s is a scalar slot on the tape.
template <typename T>
Var<T> div_scalar(const Var<T>& x, const Var<T>& s) {
  detail::require_scalar(s.shape(), "div_scalar");
  return x.tape().record(
      {x, s},
      [](auto in) {
        Tensor<T> y = *in[0];
        const T sv = (*in[1])[0];
        for (T& v : y.data()) v /= sv;
        return y;
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const T sv = (*in[1])[0];
        T gs{0};
        for (std::size_t i = 0; i < gy.size(); ++i) {
          if (gin[0]) (*gin[0])[i] += gy[i] / sv;
          gs -= gy[i] * (*in[0])[i] / (sv * sv);
        }
        if (gin[1]) (*gin[1])[0] += gs;
      });
}

/// x[n x d] + b[d] broadcast over rows; also accepts x[d].
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  if (b.shape().size() != 1 || b.shape()[0] != x.value().cols()) {
    throw DimensionError("add_bias shape mismatch: " + shape_to_string(x.shape()) + " + " +
                         shape_to_string(b.shape()));
  }
  return x.tape().record(
      {x, b},
      [](auto in) {
        Tensor<T> y = *in[0];
        const std::size_t cols = y.cols();
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += (*in[1])[i % cols];
        return y;
      },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        detail::accumulate(gin[0], gy);
        if (gin[1]) {
          const std::size_t cols = gy.cols();
          for (std::size_t i = 0; i < gy.size(); ++i) (*gin[1])[i % cols] += gy[i];
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Var<T> sum(const Var<T>& x) {
  return x.tape().record(
      {x}, [](auto in) { return Tensor<T>::scalar(distclip::sum(*in[0])); },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (T& v : gin[0]->data()) v += gy[0];
      });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const T n = static_cast<T>(x.value().size());
  return x.tape().record(
      {x},
      [](auto in) {
        double acc = 0.0;
        for (T v : in[0]->data()) acc += static_cast<double>(v);
        return Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(in[0]->size())));
      },
      [n](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (T& v : gin[0]->data()) v += gy[0] / n;
      });
}

namespace detail {

// Elementwise sum of equally shaped tensors in double, times `factor`.
template <typename T, typename Inputs>
Tensor<T> sum_slots(const Inputs& in, double factor) {
  std::vector<double> acc(in[0]->size(), 0.0);
  for (const auto* x : in)
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>((*x)[i]);
  Tensor<T> y(in[0]->shape());
  for (std::size_t i = 0; i < acc.size(); ++i) y[i] = static_cast<T>(acc[i] * factor);
  return y;
}

}  // namespace detail

/// Sum of equally shaped slots.
template <typename T>
Var<T> add_n(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ContractError("add_n of an empty list");
  for (const auto& x : xs) detail::require_same_shape(xs[0].shape(), x.shape(), "add_n");
  return xs[0].tape().record(
      xs, [](auto in) { return detail::sum_slots<T>(in, 1.0); },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (auto* g : gin) detail::accumulate(g, gy);
      });
}

/// Elementwise mean of equally shaped slots.
template <typename T>
Var<T> mean_n(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ContractError("mean_n of an empty list");
  for (const auto& x : xs) detail::require_same_shape(xs[0].shape(), x.shape(), "mean_n");
  const double inv = 1.0 / static_cast<double>(xs.size());
  return xs[0].tape().record(
      xs, [inv](auto in) { return detail::sum_slots<T>(in, inv); },
      [inv](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        Tensor<T> share = gy;
        for (T& v : share.data()) v = static_cast<T>(static_cast<double>(v) * inv);
        for (auto* g : gin) detail::accumulate(g, share);
      });
}

/// Main diagonal of a square matrix.
template <typename T>
Var<T> diagonal(const Var<T>& x) {
  kernels::require_matrix(x.shape(), "diagonal");
  if (x.shape()[0] != x.shape()[1]) {
    throw DimensionError("diagonal of non-square " + shape_to_string(x.shape()));
  }
  return x.tape().record(
      {x},
      [](auto in) {
        const std::size_t n = in[0]->dim(0);
        Tensor<T> y(Shape{n});
        for (std::size_t i = 0; i < n; ++i) y[i] = (*in[0])(i, i);
        return y;
      },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (std::size_t i = 0; i < gy.size(); ++i) (*gin[0])(i, i) += gy[i];
      });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  kernels::matmul(a.value(), b.value());  // validates shapes before recording
  return a.tape().record(
      {a, b}, [](auto in) { return kernels::matmul(*in[0], *in[1]); },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        if (gin[0]) detail::accumulate(gin[0], kernels::matmul_nt(gy, *in[1]));
        if (gin[1]) detail::accumulate(gin[1], kernels::matmul_tn(*in[0], gy));
      });
}

/// a b^T.
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  kernels::matmul_nt(a.value(), b.value());
  return a.tape().record(
      {a, b}, [](auto in) { return kernels::matmul_nt(*in[0], *in[1]); },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        if (gin[0]) detail::accumulate(gin[0], kernels::matmul(gy, *in[1]));
        if (gin[1]) detail::accumulate(gin[1], kernels::matmul_tn(gy, *in[0]));
      });
}

template <typename T>
Var<T> transpose(const Var<T>& x) {
  kernels::require_matrix(x.shape(), "transpose");
  return x.tape().record(
      {x}, [](auto in) { return kernels::transpose(*in[0]); },
      [](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        detail::accumulate(gin[0], kernels::transpose(gy));
      });
}

/// x W^T + b with W[out x in] (output-major, like torch.nn.Linear).
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  return add_bias(matmul_nt(x, weight), bias);
}

/// x (scale_k * direction_k / ||direction_k||)^T for each output unit k.
/// x is [n x in] or [in]; direction is [K x in]; scale is [K].
template <typename T>
Var<T> weight_norm_linear(const Var<T>& x, const Var<T>& direction, const Var<T>& scale_) {
  const Shape& ds = direction.shape();
  kernels::require_matrix(ds, "weight_norm_linear");
  if (scale_.shape() != Shape{ds[0]}) {
    throw DimensionError("weight_norm_linear scale " + shape_to_string(scale_.shape()) +
                         " vs direction " + shape_to_string(ds));
  }
  if (x.value().cols() != ds[1] || x.shape().size() > 2) {
    throw DimensionError("weight_norm_linear input " + shape_to_string(x.shape()) +
                         " vs direction " + shape_to_string(ds));
  }
  const bool vector_input = x.shape().size() == 1;

  struct Effective {
    static Tensor<T> weight(const Tensor<T>& dir, const Tensor<T>& g, Tensor<T>* norms) {
      Tensor<T> w(dir.shape());
      for (std::size_t k = 0; k < dir.dim(0); ++k) {
        T sq{0};
        for (T v : dir.row(k)) sq += v * v;
        const T n = std::max(std::sqrt(sq), static_cast<T>(kernels::kNormEpsilon));
        if (norms) (*norms)[k] = n;
        for (std::size_t j = 0; j < dir.dim(1); ++j) w(k, j) = g[k] * dir(k, j) / n;
      }
      return w;
    }
  };

  return x.tape().record(
      {x, direction, scale_},
      [vector_input](auto in) {
        const Tensor<T> w = Effective::weight(*in[1], *in[2], nullptr);
        const Tensor<T> xm = in[0]->reshaped(Shape{in[0]->rows(), in[0]->cols()});
        Tensor<T> y = kernels::matmul_nt(xm, w);
        return vector_input ? y.reshaped(Shape{w.dim(0)}) : y;
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const Tensor<T>& dir = *in[1];
        const Tensor<T>& g = *in[2];
        const std::size_t out_dim = dir.dim(0), in_dim = dir.dim(1);
        Tensor<T> norms(Shape{out_dim});
        const Tensor<T> w = Effective::weight(dir, g, &norms);
        const Tensor<T> xm = in[0]->reshaped(Shape{in[0]->rows(), in_dim});
        const Tensor<T> gym = gy.reshaped(Shape{xm.dim(0), out_dim});
        if (gin[0]) {
          detail::accumulate(gin[0], kernels::matmul(gym, w).reshaped(in[0]->shape()));
        }
        if (!gin[1] && !gin[2]) return;
        const Tensor<T> gw = kernels::matmul_tn(gym, xm);  // [K x in]
        for (std::size_t k = 0; k < out_dim; ++k) {
          T proj{0};  // gw_k . dir_k / ||dir_k||
          for (std::size_t j = 0; j < in_dim; ++j) proj += gw(k, j) * dir(k, j) / norms[k];
          if (gin[2]) (*gin[2])[k] += proj;
          if (gin[1]) {
            const T coef = g[k] / norms[k];
            for (std::size_t j = 0; j < in_dim; ++j)
              (*gin[1])(k, j) += coef * (gw(k, j) - dir(k, j) / norms[k] * proj);
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Normalizations and distributions

/// exp((x - max)/T) normalized along `axis` (default: last).
template <typename T>
Var<T> softmax(const Var<T>& x, int axis = -1, T temperature = T{1}) {
  kernels::require_positive_temperature(static_cast<double>(temperature));
  kernels::axis_geometry(x.shape(), axis);
  return x.tape().record(
      {x}, [axis, temperature](auto in) { return kernels::softmax(*in[0], axis, temperature); },
      [axis, temperature](auto, const Tensor<T>& y, const Tensor<T>& gy, auto gin) {
        const auto g = kernels::axis_geometry(y.shape(), axis);
        for (std::size_t o = 0; o < g.outer; ++o) {
          for (std::size_t i = 0; i < g.inner; ++i) {
            T dot{0};
            for (std::size_t l = 0; l < g.length; ++l) {
              const std::size_t idx = g.index(o, l, i);
              dot += gy[idx] * y[idx];
            }
            for (std::size_t l = 0; l < g.length; ++l) {
              const std::size_t idx = g.index(o, l, i);
              (*gin[0])[idx] += y[idx] * (gy[idx] - dot) / temperature;
            }
          }
        }
      });
}

template <typename T>
Var<T> log_softmax(const Var<T>& x, int axis = -1, T temperature = T{1}) {
  kernels::require_positive_temperature(static_cast<double>(temperature));
  kernels::axis_geometry(x.shape(), axis);
  return x.tape().record(
      {x},
      [axis, temperature](auto in) { return kernels::log_softmax(*in[0], axis, temperature); },
      [axis, temperature](auto, const Tensor<T>& y, const Tensor<T>& gy, auto gin) {
        const auto g = kernels::axis_geometry(y.shape(), axis);
        for (std::size_t o = 0; o < g.outer; ++o) {
          for (std::size_t i = 0; i < g.inner; ++i) {
            T total{0};
            for (std::size_t l = 0; l < g.length; ++l) total += gy[g.index(o, l, i)];
            for (std::size_t l = 0; l < g.length; ++l) {
              const std::size_t idx = g.index(o, l, i);
              (*gin[0])[idx] += (gy[idx] - std::exp(y[idx]) * total) / temperature;
            }
          }
        }
      });
}

/// Row-wise x / max(||x||_2, 1e-12).
template <typename T>
Var<T> l2_normalize(const Var<T>& x) {
  return x.tape().record(
      {x}, [](auto in) { return kernels::l2_normalize(*in[0]); },
      [](auto in, const Tensor<T>& y, const Tensor<T>& gy, auto gin) {
        const Tensor<T>& xv = *in[0];
        const std::size_t rows = xv.rows(), cols = xv.cols();
        const T eps = static_cast<T>(kernels::kNormEpsilon);
        for (std::size_t r = 0; r < rows; ++r) {
          T sq{0}, yg{0};
          for (std::size_t c = 0; c < cols; ++c) {
            sq += xv[r * cols + c] * xv[r * cols + c];
            yg += y[r * cols + c] * gy[r * cols + c];
          }
          const T norm = std::sqrt(sq);
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t idx = r * cols + c;
            (*gin[0])[idx] += norm > eps ? (gy[idx] - y[idx] * yg) / norm : gy[idx] / eps;
          }
        }
      });
}

/// Per-row layer normalization with learnable gain and bias (variance eps 1e-5).
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias) {
  const std::size_t cols = x.value().cols();
  if (gain.shape() != Shape{cols} || bias.shape() != Shape{cols}) {
    throw DimensionError("layer_norm parameters " + shape_to_string(gain.shape()) + ", " +
                         shape_to_string(bias.shape()) + " vs input " +
                         shape_to_string(x.shape()));
  }
  const T eps = static_cast<T>(kernels::kLayerNormEpsilon);
  auto stats = [eps](const Tensor<T>& xv, std::size_t r, T& mu, T& inv) {
    const std::size_t n = xv.cols();
    mu = T{0};
    for (std::size_t c = 0; c < n; ++c) mu += xv[r * n + c];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t c = 0; c < n; ++c) {
      const T d = xv[r * n + c] - mu;
      var += d * d;
    }
    var /= static_cast<T>(n);
    inv = T{1} / std::sqrt(var + eps);
  };
  return x.tape().record(
      {x, gain, bias},
      [stats](auto in) {
        const Tensor<T>& xv = *in[0];
        const std::size_t n = xv.cols();
        Tensor<T> y(xv.shape());
        for (std::size_t r = 0; r < xv.rows(); ++r) {
          T mu, inv;
          stats(xv, r, mu, inv);
          for (std::size_t c = 0; c < n; ++c)
            y[r * n + c] = (xv[r * n + c] - mu) * inv * (*in[1])[c] + (*in[2])[c];
        }
        return y;
      },
      [stats](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const Tensor<T>& xv = *in[0];
        const Tensor<T>& g = *in[1];
        const std::size_t n = xv.cols();
        std::vector<T> xhat(n), dxhat(n);
        for (std::size_t r = 0; r < xv.rows(); ++r) {
          T mu, inv;
          stats(xv, r, mu, inv);
          T mean_d{0}, mean_dx{0};
          for (std::size_t c = 0; c < n; ++c) {
            const std::size_t idx = r * n + c;
            xhat[c] = (xv[idx] - mu) * inv;
            dxhat[c] = gy[idx] * g[c];
            mean_d += dxhat[c];
            mean_dx += dxhat[c] * xhat[c];
            if (gin[1]) (*gin[1])[c] += gy[idx] * xhat[c];
            if (gin[2]) (*gin[2])[c] += gy[idx];
          }
          mean_d /= static_cast<T>(n);
          mean_dx /= static_cast<T>(n);
          if (gin[0]) {
            for (std::size_t c = 0; c < n; ++c)
              (*gin[0])[r * n + c] += inv * (dxhat[c] - mean_d - xhat[c] * mean_dx);
          }
        }
      });
}

/// -sum(target * log(max(pred, 1e-12))). The target is a plain tensor, so no
/// gradient can reach whatever produced it.
template <typename T>
Var<T> cross_entropy_soft(const Tensor<T>& target, const Var<T>& pred) {
  if (target.size() != pred.value().size()) {
    throw DimensionError("cross_entropy_soft length mismatch: " +
                         shape_to_string(target.shape()) + " vs " +
                         shape_to_string(pred.shape()));
  }
  const T tol = static_cast<T>(1e-4);
  if (std::abs(distclip::sum(target) - T{1}) > tol ||
      std::abs(distclip::sum(pred.value()) - T{1}) > tol) {
    throw ContractError("cross_entropy_soft inputs must each sum to 1");
  }
  return pred.tape().record(
      {pred},
      [target](auto in) { return Tensor<T>::scalar(kernels::cross_entropy_soft(target, *in[0])); },
      [target](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const T clamp = static_cast<T>(kernels::kLogClamp);
        for (std::size_t i = 0; i < target.size(); ++i) {
          const T p = (*in[0])[i];
          if (p > clamp) (*gin[0])[i] -= gy[0] * target[i] / p;
        }
      });
}

// ---------------------------------------------------------------------------
// Structural ops

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  x.value().reshaped(shape);  // validates
  return x.tape().record(
      {x}, [shape](auto in) { return in[0]->reshaped(shape); },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        detail::accumulate(gin[0], gy.reshaped(in[0]->shape()));
      });
}

/// Rows [start, start + count) of a matrix.
template <typename T>
Var<T> slice_rows(const Var<T>& x, std::size_t start, std::size_t count) {
  kernels::require_matrix(x.shape(), "slice_rows");
  if (start + count > x.shape()[0]) {
    throw DimensionError("slice_rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " +
                         shape_to_string(x.shape()));
  }
  return x.tape().record(
      {x},
      [start, count](auto in) {
        const std::size_t cols = in[0]->cols();
        auto src = in[0]->data().subspan(start * cols, count * cols);
        return Tensor<T>(Shape{count, cols}, std::vector<T>(src.begin(), src.end()));
      },
      [start](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const std::size_t offset = start * gy.cols();
        for (std::size_t i = 0; i < gy.size(); ++i) (*gin[0])[offset + i] += gy[i];
      });
}

/// Columns [start, start + count) of a matrix.
template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t start, std::size_t count) {
  kernels::require_matrix(x.shape(), "slice_cols");
  if (start + count > x.shape()[1]) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " +
                         shape_to_string(x.shape()));
  }
  return x.tape().record(
      {x},
      [start, count](auto in) {
        const std::size_t rows = in[0]->rows();
        Tensor<T> y(Shape{rows, count});
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < count; ++c) y(r, c) = (*in[0])(r, start + c);
        return y;
      },
      [start, count](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        for (std::size_t r = 0; r < gy.rows(); ++r)
          for (std::size_t c = 0; c < count; ++c) (*gin[0])(r, start + c) += gy(r, c);
      });
}

/// Stacks matrices (or vectors, as single rows) vertically.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ContractError("concat_rows of an empty list");
  const std::size_t cols = xs[0].value().cols();
  for (const auto& x : xs) {
    if (x.value().cols() != cols || x.shape().size() > 2 || x.shape().empty()) {
      throw DimensionError("concat_rows column mismatch: " + shape_to_string(xs[0].shape()) +
                           " vs " + shape_to_string(x.shape()));
    }
  }
  return xs[0].tape().record(
      xs,
      [cols](auto in) {
        std::size_t rows = 0;
        for (const auto* t : in) rows += t->rows();
        std::vector<T> data;
        data.reserve(rows * cols);
        for (const auto* t : in) data.insert(data.end(), t->data().begin(), t->data().end());
        return Tensor<T>(Shape{rows, cols}, std::move(data));
      },
      [](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < in.size(); ++k) {
          const std::size_t n = in[k]->size();
          if (gin[k]) {
            for (std::size_t i = 0; i < n; ++i) (*gin[k])[i] += gy[offset + i];
          }
          offset += n;
        }
      });
}

/// Places matrices with equal row counts side by side.
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ContractError("concat_cols of an empty list");
  const std::size_t rows = xs[0].value().rows();
  for (const auto& x : xs) {
    kernels::require_matrix(x.shape(), "concat_cols");
    if (x.shape()[0] != rows) {
      throw DimensionError("concat_cols row mismatch: " + shape_to_string(xs[0].shape()) +
                           " vs " + shape_to_string(x.shape()));
    }
  }
  return xs[0].tape().record(
      xs,
      [rows](auto in) {
        std::size_t cols = 0;
        for (const auto* t : in) cols += t->cols();
        Tensor<T> y(Shape{rows, cols});
        std::size_t offset = 0;
        for (const auto* t : in) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < t->cols(); ++c) y(r, offset + c) = (*t)(r, c);
          offset += t->cols();
        }
        return y;
      },
      [rows](auto in, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < in.size(); ++k) {
          const std::size_t cols = in[k]->cols();
          if (gin[k]) {
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < cols; ++c) (*gin[k])(r, c) += gy(r, offset + c);
          }
          offset += cols;
        }
      });
}

/// Gathers rows of `table` at `ids`.
template <typename T>
Var<T> embedding(const Var<T>& table, std::vector<std::int32_t> ids) {
  kernels::require_matrix(table.shape(), "embedding");
  const std::size_t vocab = table.shape()[0];
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(vocab));
    }
  }
  return table.tape().record(
      {table},
      [ids](auto in) {
        const std::size_t cols = in[0]->cols();
        Tensor<T> y(Shape{ids.size(), cols});
        for (std::size_t r = 0; r < ids.size(); ++r) {
          auto src = in[0]->row(static_cast<std::size_t>(ids[r]));
          std::copy(src.begin(), src.end(), y.row(r).begin());
        }
        return y;
      },
      [ids](auto, const Tensor<T>&, const Tensor<T>& gy, auto gin) {
        const std::size_t cols = gy.cols();
        for (std::size_t r = 0; r < ids.size(); ++r)
          for (std::size_t c = 0; c < cols; ++c)
            (*gin[0])(static_cast<std::size_t>(ids[r]), c) += gy(r, c);
      });
}

}  // namespace distclip
