// blxam/kernels.hpp

// Copyright 2026  The blxam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BLXAM_KERNELS_HPP_
#define BLXAM_KERNELS_HPP_

#include <cmath>
#include <cstddef>

#include "blxam/error.hpp"

// Raw numeric kernels shared by the autodiff ops and the no-grad streaming
// path. Every kernel is row-oriented with a fixed accumulation order, so a
// frame computed in a streaming feed is bit-identical to the same frame in
// a whole-utterance forward. Built with -ffp-contract=off; do not enable
// fast-math.

namespace blxam::kernels {

/// c[m x n] += a[m x k] * b[k x n], row-major.
inline void matmul_acc(const double *a, std::size_t m, std::size_t k,
                       const double *b, std::size_t n, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double *ai = a + i * k;
    double *ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double s = ai[p];
      const double *bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

/// c[m x k] += g[m x n] * b[k x n]^T  (i.e. c = g * transpose(b)).
inline void matmul_acc_nt(const double *g, std::size_t m, std::size_t n,
                          const double *b, std::size_t k, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double *gi = g + i * n;
    double *ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double *bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

/// c[k x n] += a[m x k]^T * g[m x n]  (i.e. c = transpose(a) * g).
inline void matmul_acc_tn(const double *a, std::size_t m, std::size_t k,
                          const double *g, std::size_t n, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double *ai = a + i * k;
    const double *gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double s = ai[p];
      double *cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += s * gi[j];
    }
  }
}

inline double dot(const double *a, const double *b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// Sinusoidal position row for absolute frame index t: even dims sin,
/// odd dims cos, wavelengths 10000^(2i/d).
inline void posenc_row(std::size_t t, std::size_t d, double *out) {
  for (std::size_t i = 0; i < d; i += 2) {
    double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                           static_cast<double>(d));
    double ang = static_cast<double>(t) * freq;
    out[i] = std::sin(ang);
    if (i + 1 < d) out[i + 1] = std::cos(ang);
  }
}

/// y = normalized(x) * gain + bias over one row; zero mean, unit variance
/// (biased variance), then affine. Saves mean and reciprocal stddev for
/// the backward pass when save pointers are given.
inline void layer_norm_row(const double *x, std::size_t n, const double *gain,
                           const double *bias, double eps, double *y,
                           double *save_mean = nullptr,
                           double *save_rstd = nullptr) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  double rstd = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (x[i] - mean) * rstd * gain[i] + bias[i];
  if (save_mean) *save_mean = mean;
  if (save_rstd) *save_rstd = rstd;
}

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double gelu_grad_scalar(double x) {
  static const double kInvSqrt2Pi = 0.3989422804014326779;
  double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
  double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

inline void gelu(const double *x, std::size_t n, double *y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu_scalar(x[i]);
}

/// In-place max-subtracted softmax over one row.
inline void softmax_row(double *x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    z += x[i];
  }
  for (std::size_t i = 0; i < n; ++i) x[i] /= z;
}

/// y = x - logsumexp(x) over one row (max-subtracted).
inline void log_softmax_row(const double *x, std::size_t n, double *y) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i] - m);
  double lz = std::log(z);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - m - lz;
}

/// Multi-head scaled dot-product attention for one query row against key
/// rows [lo, hi] of the history. q is one row of width d; kv history is
/// row-major [.. x d]. Writes the attended row to out. If save_w is
/// non-null it receives the attention weights, heads * (hi - lo + 1)
/// doubles, head-major.
inline void attend_row(const double *q, const double *keys, const double *vals,
                       std::size_t lo, std::size_t hi, std::size_t heads,
                       std::size_t d, double *out, double *scratch,
                       double *save_w = nullptr) {
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t span = hi - lo + 1;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    double *w = scratch;  // span scores for this head
    for (std::size_t j = 0; j < span; ++j)
      w[j] = dot(q + off, keys + (lo + j) * d + off, dh) * scale;
    softmax_row(w, span);
    if (save_w) {
      for (std::size_t j = 0; j < span; ++j) save_w[h * span + j] = w[j];
    }
    for (std::size_t c = 0; c < dh; ++c) out[off + c] = 0.0;
    for (std::size_t j = 0; j < span; ++j)
      axpy(w[j], vals + (lo + j) * d + off, out + off, dh);
  }
}

/// Silence-renormalized combination of two hidden rows. pa and pb are the
/// two locale probabilities; weights are pa/(pa+pb), pb/(pa+pb), falling
/// back to 0.5/0.5 when the speech mass vanishes. Returns the weight on a.
inline double combine_weight_a(double pa, double pb) {
  double s = pa + pb;
  if (s < 1e-8) return 0.5;
  return pa / s;
}

inline void combine_row(const double *ha, const double *hb, double pa,
                        double pb, std::size_t n, double *out) {
  double wa = combine_weight_a(pa, pb);
  double wb = 1.0 - wa;
  for (std::size_t i = 0; i < n; ++i) out[i] = wa * ha[i] + wb * hb[i];
}

}  // namespace blxam::kernels

#endif  // BLXAM_KERNELS_HPP_
