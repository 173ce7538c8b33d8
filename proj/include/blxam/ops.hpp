// blxam/ops.hpp

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

#ifndef BLXAM_OPS_HPP_
#define BLXAM_OPS_HPP_

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/kernels.hpp"
#include "blxam/tape.hpp"
#include "blxam/tensor.hpp"

// Differentiable operations over tape nodes. Forward passes call into
// blxam::kernels so that a whole-utterance forward and the row-at-a-time
// streaming path produce bit-identical values.

namespace blxam::ops {

inline Node *matmul(Tape &tape, Node *a, Node *b) {
  BLXAM_CHECK(a->val.rank() == 2 && b->val.rank() == 2,
              "matmul: expected matrices, got " << a->val.shape_str() << " and "
                                                << b->val.shape_str());
  const std::size_t m = a->val.rows(), k = a->val.cols();
  const std::size_t k2 = b->val.rows(), n = b->val.cols();
  BLXAM_CHECK(k == k2, "matmul: cannot multiply " << a->val.shape_str()
                                                  << " by "
                                                  << b->val.shape_str());
  Tensor out({m, n});
  kernels::matmul_acc(a->val.v.data(), m, k, b->val.v.data(), n, out.v.data());
  Node *o = tape.make(std::move(out));
  o->back = [o, a, b, m, k, n]() {
    kernels::matmul_acc_nt(o->grad.v.data(), m, n, b->val.v.data(), k,
                           a->grad.v.data());
    kernels::matmul_acc_tn(a->val.v.data(), m, k, o->grad.v.data(), n,
                           b->grad.v.data());
  };
  return o;
}

inline Node *add(Tape &tape, Node *a, Node *b) {
  BLXAM_CHECK(a->val.same_shape(b->val),
              "add: shape mismatch " << a->val.shape_str() << " vs "
                                     << b->val.shape_str());
  Tensor out(a->val.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = a->val.v[i] + b->val.v[i];
  Node *o = tape.make(std::move(out));
  o->back = [o, a, b]() {
    for (std::size_t i = 0; i < o->grad.v.size(); ++i) {
      a->grad.v[i] += o->grad.v[i];
      b->grad.v[i] += o->grad.v[i];
    }
  };
  return o;
}

inline Node *mul(Tape &tape, Node *a, Node *b) {
  BLXAM_CHECK(a->val.same_shape(b->val),
              "mul: shape mismatch " << a->val.shape_str() << " vs "
                                     << b->val.shape_str());
  Tensor out(a->val.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = a->val.v[i] * b->val.v[i];
  Node *o = tape.make(std::move(out));
  o->back = [o, a, b]() {
    for (std::size_t i = 0; i < o->grad.v.size(); ++i) {
      a->grad.v[i] += o->grad.v[i] * b->val.v[i];
      b->grad.v[i] += o->grad.v[i] * a->val.v[i];
    }
  };
  return o;
}

/// out[i,j] = a[i,j] + b[j]; the usual bias broadcast over rows.
inline Node *add_row_broadcast(Tape &tape, Node *a, Node *b) {
  BLXAM_CHECK(a->val.rank() == 2 && b->val.rank() == 1 &&
                  a->val.cols() == b->val.size(0),
              "add_row_broadcast: shape mismatch "
                  << a->val.shape_str() << " vs " << b->val.shape_str());
  const std::size_t m = a->val.rows(), n = a->val.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.v[i * n + j] = a->val.v[i * n + j] + b->val.v[j];
  Node *o = tape.make(std::move(out));
  o->back = [o, a, b, m, n]() {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        a->grad.v[i * n + j] += o->grad.v[i * n + j];
        b->grad.v[j] += o->grad.v[i * n + j];
      }
  };
  return o;
}

inline Node *gelu(Tape &tape, Node *x) {
  Tensor out(x->val.shape);
  kernels::gelu(x->val.v.data(), x->val.numel(), out.v.data());
  Node *o = tape.make(std::move(out));
  o->back = [o, x]() {
    for (std::size_t i = 0; i < o->grad.v.size(); ++i)
      x->grad.v[i] += o->grad.v[i] * kernels::gelu_grad_scalar(x->val.v[i]);
  };
  return o;
}

/// Row-wise layer norm with affine gain/bias; accepts a vector (treated as
/// one row) or a matrix.
inline Node *layer_norm(Tape &tape, Node *x, Node *gain, Node *bias,
                        double eps = 1e-5) {
  BLXAM_CHECK(x->val.rank() == 1 || x->val.rank() == 2,
              "layer_norm: expected vector or matrix, got "
                  << x->val.shape_str());
  const std::size_t n =
      x->val.rank() == 2 ? x->val.cols() : x->val.size(0);
  const std::size_t m = x->val.rank() == 2 ? x->val.rows() : 1;
  BLXAM_CHECK(gain->val.rank() == 1 && gain->val.size(0) == n,
              "layer_norm: gain shape " << gain->val.shape_str()
                                        << " does not match last dim " << n);
  BLXAM_CHECK(bias->val.rank() == 1 && bias->val.size(0) == n,
              "layer_norm: bias shape " << bias->val.shape_str()
                                        << " does not match last dim " << n);
  Tensor out(x->val.shape);
  std::vector<double> means(m), rstds(m);
  for (std::size_t i = 0; i < m; ++i)
    kernels::layer_norm_row(x->val.v.data() + i * n, n, gain->val.v.data(),
                            bias->val.v.data(), eps, out.v.data() + i * n,
                            &means[i], &rstds[i]);
  Node *o = tape.make(std::move(out));
  o->back = [o, x, gain, bias, m, n, means = std::move(means),
             rstds = std::move(rstds)]() {
    for (std::size_t i = 0; i < m; ++i) {
      const double *xr = x->val.v.data() + i * n;
      const double *gr = o->grad.v.data() + i * n;
      const double mean = means[i], rstd = rstds[i];
      // xhat_j = (x_j - mean) * rstd; gxh = g * gain
      double sum_gxh = 0.0, sum_gxh_xhat = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double xhat = (xr[j] - mean) * rstd;
        double gxh = gr[j] * gain->val.v[j];
        sum_gxh += gxh;
        sum_gxh_xhat += gxh * xhat;
        gain->grad.v[j] += gr[j] * xhat;
        bias->grad.v[j] += gr[j];
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        double xhat = (xr[j] - mean) * rstd;
        double gxh = gr[j] * gain->val.v[j];
        x->grad.v[i * n + j] +=
            rstd * (gxh - inv_n * sum_gxh - xhat * inv_n * sum_gxh_xhat);
      }
    }
  };
  return o;
}

/// Softmax along `axis` of a vector (axis 0) or matrix (axis 0 or 1),
/// max-subtracted. Rejects non-finite input.
inline Node *softmax(Tape &tape, Node *x, std::size_t axis) {
  for (double v : x->val.v)
    BLXAM_CHECK(std::isfinite(v), "softmax: non-finite input value " << v);
  BLXAM_CHECK(x->val.rank() >= 1 && x->val.rank() <= 2,
              "softmax: expected vector or matrix, got "
                  << x->val.shape_str());
  BLXAM_CHECK(axis < x->val.rank(), "softmax: axis " << axis
                                                     << " invalid for shape "
                                                     << x->val.shape_str());
  Tensor out(x->val.shape);
  const bool row_wise = (x->val.rank() == 1) || (axis == 1);
  const std::size_t m = x->val.rank() == 2 ? x->val.rows() : 1;
  const std::size_t n = x->val.rank() == 2 ? x->val.cols() : x->val.size(0);
  if (row_wise) {
    for (std::size_t i = 0; i < m; ++i) {
      double *dst = out.v.data() + i * n;
      const double *src = x->val.v.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] = src[j];
      kernels::softmax_row(dst, n);
    }
  } else {
    std::vector<double> col(m);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) col[i] = x->val.v[i * n + j];
      kernels::softmax_row(col.data(), m);
      for (std::size_t i = 0; i < m; ++i) out.v[i * n + j] = col[i];
    }
  }
  Node *o = tape.make(std::move(out));
  o->back = [o, x, row_wise, m, n]() {
    // gx = y .* (g - sum(g .* y)) per slice
    if (row_wise) {
      for (std::size_t i = 0; i < m; ++i) {
        const double *y = o->val.v.data() + i * n;
        const double *g = o->grad.v.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += g[j] * y[j];
        for (std::size_t j = 0; j < n; ++j)
          x->grad.v[i * n + j] += y[j] * (g[j] - s);
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
          s += o->grad.v[i * n + j] * o->val.v[i * n + j];
        for (std::size_t i = 0; i < m; ++i)
          x->grad.v[i * n + j] +=
              o->val.v[i * n + j] * (o->grad.v[i * n + j] - s);
      }
    }
  };
  return o;
}

/// Per-row log softmax of a matrix.
inline Node *log_softmax_rows(Tape &tape, Node *x) {
  BLXAM_CHECK(x->val.rank() == 2, "log_softmax_rows: expected matrix, got "
                                      << x->val.shape_str());
  const std::size_t m = x->val.rows(), n = x->val.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    kernels::log_softmax_row(x->val.v.data() + i * n, n, out.v.data() + i * n);
  Node *o = tape.make(std::move(out));
  o->back = [o, x, m, n]() {
    for (std::size_t i = 0; i < m; ++i) {
      const double *y = o->val.v.data() + i * n;
      const double *g = o->grad.v.data() + i * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g[j];
      for (std::size_t j = 0; j < n; ++j)
        x->grad.v[i * n + j] += g[j] - std::exp(y[j]) * s;
    }
  };
  return o;
}

namespace detail {

/// Shared backward for one attended row (one head, explicit index set).
inline void attend_backward_row(const double *g_out, const double *q,
                                const double *keys, const double *vals,
                                const std::size_t *idx, std::size_t span,
                                std::size_t off, std::size_t dh, double scale,
                                const double *w, double *gq, double *gkeys,
                                double *gvals, std::size_t d,
                                std::vector<double> &gw) {
  gw.resize(span);
  double s = 0.0;
  for (std::size_t j = 0; j < span; ++j) {
    const double *vj = vals + idx[j] * d + off;
    double t = 0.0;
    for (std::size_t c = 0; c < dh; ++c) {
      t += g_out[off + c] * vj[c];
      gvals[idx[j] * d + off + c] += w[j] * g_out[off + c];
    }
    gw[j] = t;
    s += w[j] * t;
  }
  for (std::size_t j = 0; j < span; ++j) {
    double gs = w[j] * (gw[j] - s) * scale;
    const double *kj = keys + idx[j] * d + off;
    for (std::size_t c = 0; c < dh; ++c) {
      gq[off + c] += gs * kj[c];
      gkeys[idx[j] * d + off + c] += gs * q[off + c];
    }
  }
}

}  // namespace detail

/// Multi-head scaled dot-product attention with an explicit boolean mask
/// (nonzero = row t may attend to column j). Every row must attend
/// somewhere.
inline Node *masked_attention(Tape &tape, Node *q, Node *k, Node *v,
                              std::size_t heads, const Tensor &mask) {
  BLXAM_CHECK(q->val.rank() == 2 && q->val.same_shape(k->val) &&
                  q->val.same_shape(v->val),
              "masked_attention: q/k/v shapes must match, got "
                  << q->val.shape_str() << ", " << k->val.shape_str() << ", "
                  << v->val.shape_str());
  const std::size_t t_len = q->val.rows(), d = q->val.cols();
  BLXAM_CHECK(heads > 0 && d % heads == 0,
              "masked_attention: model dim " << d << " not divisible by "
                                             << heads << " heads");
  BLXAM_CHECK(mask.rank() == 2 && mask.rows() == t_len && mask.cols() == t_len,
              "masked_attention: mask shape " << mask.shape_str()
                                              << " must be [" << t_len << " x "
                                              << t_len << "]");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out({t_len, d});
  // Ragged per-row index lists and attention weights (head-major per row).
  std::vector<std::vector<std::size_t>> row_idx(t_len);
  std::vector<std::vector<double>> row_w(t_len);
  std::vector<double> scores;
  for (std::size_t t = 0; t < t_len; ++t) {
    auto &idx = row_idx[t];
    for (std::size_t j = 0; j < t_len; ++j)
      if (mask.v[t * t_len + j] != 0.0) idx.push_back(j);
    BLXAM_CHECK(!idx.empty(),
                "masked_attention: row " << t << " attends to nothing");
    const std::size_t span = idx.size();
    row_w[t].resize(heads * span);
    scores.resize(span);
    double *orow = out.v.data() + t * d;
    const double *qrow = q->val.v.data() + t * d;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t j = 0; j < span; ++j)
        scores[j] = kernels::dot(qrow + off, k->val.v.data() + idx[j] * d + off,
                                 dh) *
                    scale;
      kernels::softmax_row(scores.data(), span);
      for (std::size_t j = 0; j < span; ++j)
        row_w[t][h * span + j] = scores[j];
      for (std::size_t c = 0; c < dh; ++c) orow[off + c] = 0.0;
      for (std::size_t j = 0; j < span; ++j)
        kernels::axpy(scores[j], v->val.v.data() + idx[j] * d + off,
                      orow + off, dh);
    }
  }
  Node *o = tape.make(std::move(out));
  o->back = [o, q, k, v, heads, dh, scale, d, t_len,
             row_idx = std::move(row_idx), row_w = std::move(row_w)]() {
    std::vector<double> gw;
    for (std::size_t t = 0; t < t_len; ++t) {
      const auto &idx = row_idx[t];
      const std::size_t span = idx.size();
      for (std::size_t h = 0; h < heads; ++h)
        detail::attend_backward_row(
            o->grad.v.data() + t * d, q->val.v.data() + t * d,
            k->val.v.data(), v->val.v.data(), idx.data(), span, h * dh, dh,
            scale, row_w[t].data() + h * span, q->grad.v.data() + t * d,
            k->grad.v.data(), v->grad.v.data(), d, gw);
    }
  };
  return o;
}

constexpr std::size_t kUnlimitedContext = static_cast<std::size_t>(-1);

/// Causal self-attention: row t attends to rows [max(0, t - left_context),
/// t]. This is the op the model uses; its forward is the same kernel the
/// streaming path calls per frame, so both produce identical bytes.
inline Node *causal_attention(Tape &tape, Node *q, Node *k, Node *v,
                              std::size_t heads,
                              std::size_t left_context = kUnlimitedContext) {
  BLXAM_CHECK(q->val.rank() == 2 && q->val.same_shape(k->val) &&
                  q->val.same_shape(v->val),
              "causal_attention: q/k/v shapes must match, got "
                  << q->val.shape_str() << ", " << k->val.shape_str() << ", "
                  << v->val.shape_str());
  const std::size_t t_len = q->val.rows(), d = q->val.cols();
  BLXAM_CHECK(heads > 0 && d % heads == 0,
              "causal_attention: model dim " << d << " not divisible by "
                                             << heads << " heads");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out({t_len, d});
  std::vector<std::vector<double>> row_w(t_len);
  std::vector<double> scratch;
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::size_t lo =
        (left_context == kUnlimitedContext || t <= left_context)
            ? 0
            : t - left_context;
    const std::size_t span = t - lo + 1;
    row_w[t].resize(heads * span);
    scratch.resize(span);
    kernels::attend_row(q->val.v.data() + t * d, k->val.v.data(),
                        v->val.v.data(), lo, t, heads, d,
                        out.v.data() + t * d, scratch.data(),
                        row_w[t].data());
  }
  Node *o = tape.make(std::move(out));
  o->back = [o, q, k, v, heads, dh, scale, d, t_len, left_context,
             row_w = std::move(row_w)]() {
    std::vector<double> gw;
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < t_len; ++t) {
      const std::size_t lo =
          (left_context == kUnlimitedContext || t <= left_context)
              ? 0
              : t - left_context;
      const std::size_t span = t - lo + 1;
      idx.resize(span);
      for (std::size_t j = 0; j < span; ++j) idx[j] = lo + j;
      for (std::size_t h = 0; h < heads; ++h)
        detail::attend_backward_row(
            o->grad.v.data() + t * d, q->val.v.data() + t * d,
            k->val.v.data(), v->val.v.data(), idx.data(), span, h * dh, dh,
            scale, row_w[t].data() + h * span, q->grad.v.data() + t * d,
            k->grad.v.data(), v->grad.v.data(), d, gw);
    }
  };
  return o;
}

/// Mean over frames of -log softmax(logits)[target]. Optional per-class
/// weights multiply each frame's term (still divided by frame count).
inline Node *cross_entropy(Tape &tape, Node *logits,
                           const std::vector<int> &targets,
                           const std::vector<double> &class_weights = {}) {
  BLXAM_CHECK(logits->val.rank() == 2, "cross_entropy: expected matrix, got "
                                           << logits->val.shape_str());
  const std::size_t t_len = logits->val.rows(), n_cls = logits->val.cols();
  BLXAM_CHECK(targets.size() == t_len,
              "cross_entropy: " << targets.size() << " targets for " << t_len
                                << " frames");
  BLXAM_CHECK(class_weights.empty() || class_weights.size() == n_cls,
              "cross_entropy: " << class_weights.size() << " class weights for "
                                << n_cls << " classes");
  for (std::size_t t = 0; t < t_len; ++t)
    BLXAM_CHECK(targets[t] >= 0 && static_cast<std::size_t>(targets[t]) < n_cls,
                "cross_entropy: target " << targets[t] << " out of range [0, "
                                         << n_cls << ") at frame " << t);
  std::vector<double> logp(t_len * n_cls);
  for (std::size_t t = 0; t < t_len; ++t)
    kernels::log_softmax_row(logits->val.v.data() + t * n_cls, n_cls,
                             logp.data() + t * n_cls);
  double loss = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    double w = class_weights.empty() ? 1.0 : class_weights[targets[t]];
    loss += -w * logp[t * n_cls + static_cast<std::size_t>(targets[t])];
  }
  loss /= static_cast<double>(t_len);
  Node *o = tape.make(Tensor::scalar(loss));
  o->back = [o, logits, targets, class_weights, t_len, n_cls,
             logp = std::move(logp)]() {
    const double g = o->grad.v[0] / static_cast<double>(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      double w = class_weights.empty() ? 1.0 : class_weights[targets[t]];
      const double *lp = logp.data() + t * n_cls;
      for (std::size_t c = 0; c < n_cls; ++c) {
        double p = std::exp(lp[c]);
        double ind = (static_cast<std::size_t>(targets[t]) == c) ? 1.0 : 0.0;
        logits->grad.v[t * n_cls + c] += g * w * (p - ind);
      }
    }
  };
  return o;
}

/// Column-wise concatenation of two matrices with equal row counts.
inline Node *concat_cols(Tape &tape, Node *a, Node *b) {
  BLXAM_CHECK(a->val.rank() == 2 && b->val.rank() == 2 &&
                  a->val.rows() == b->val.rows(),
              "concat_cols: row counts must match, got "
                  << a->val.shape_str() << " vs " << b->val.shape_str());
  const std::size_t m = a->val.rows(), na = a->val.cols(), nb = b->val.cols();
  Tensor out({m, na + nb});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < na; ++j)
      out.v[i * (na + nb) + j] = a->val.v[i * na + j];
    for (std::size_t j = 0; j < nb; ++j)
      out.v[i * (na + nb) + na + j] = b->val.v[i * nb + j];
  }
  Node *o = tape.make(std::move(out));
  o->back = [o, a, b, m, na, nb]() {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < na; ++j)
        a->grad.v[i * na + j] += o->grad.v[i * (na + nb) + j];
      for (std::size_t j = 0; j < nb; ++j)
        b->grad.v[i * nb + j] += o->grad.v[i * (na + nb) + na + j];
    }
  };
  return o;
}

/// Silence-renormalized soft combination of two per-locale hidden streams.
/// p is a [T x 3] row-stochastic matrix (locale-a, locale-b, silence); the
/// combination weight on stream a is p_a / (p_a + p_b), falling back to
/// 0.5 when the speech mass is below 1e-8 (no gradient to p there).
inline Node *soft_combine(Tape &tape, Node *ha, Node *hb, Node *p) {
  BLXAM_CHECK(ha->val.rank() == 2 && ha->val.same_shape(hb->val),
              "soft_combine: hidden shapes must match, got "
                  << ha->val.shape_str() << " vs " << hb->val.shape_str());
  BLXAM_CHECK(p->val.rank() == 2 && p->val.rows() == ha->val.rows() &&
                  p->val.cols() == 3,
              "soft_combine: probabilities must be [" << ha->val.rows()
                                                      << " x 3], got "
                                                      << p->val.shape_str());
  const std::size_t t_len = ha->val.rows(), n = ha->val.cols();
  Tensor out({t_len, n});
  for (std::size_t t = 0; t < t_len; ++t)
    kernels::combine_row(ha->val.v.data() + t * n, hb->val.v.data() + t * n,
                         p->val.v[t * 3 + 0], p->val.v[t * 3 + 1], n,
                         out.v.data() + t * n);
  Node *o = tape.make(std::move(out));
  o->back = [o, ha, hb, p, t_len, n]() {
    for (std::size_t t = 0; t < t_len; ++t) {
      const double pa = p->val.v[t * 3 + 0], pb = p->val.v[t * 3 + 1];
      const double s = pa + pb;
      const double wa = kernels::combine_weight_a(pa, pb);
      const double wb = 1.0 - wa;
      double gwa = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        const double g = o->grad.v[t * n + c];
        ha->grad.v[t * n + c] += g * wa;
        hb->grad.v[t * n + c] += g * wb;
        gwa += g * (ha->val.v[t * n + c] - hb->val.v[t * n + c]);
      }
      if (s >= 1e-8) {
        p->grad.v[t * 3 + 0] += gwa * pb / (s * s);
        p->grad.v[t * 3 + 1] += -gwa * pa / (s * s);
      }
    }
  };
  return o;
}

/// Sum of all entries, as a scalar node.
inline Node *sum_all(Tape &tape, Node *x) {
  double s = 0.0;
  for (double v : x->val.v) s += v;
  Node *o = tape.make(Tensor::scalar(s));
  o->back = [o, x]() {
    for (std::size_t i = 0; i < x->grad.v.size(); ++i)
      x->grad.v[i] += o->grad.v[0];
  };
  return o;
}

/// Weighted sum of scalar nodes: sum_i w_i * x_i. Used to combine loss
/// terms.
inline Node *weighted_sum(Tape &tape,
                          const std::vector<std::pair<Node *, double>> &terms) {
  BLXAM_CHECK(!terms.empty(), "weighted_sum: no terms");
  double s = 0.0;
  for (const auto &[node, w] : terms) {
    BLXAM_CHECK(node->val.numel() == 1,
                "weighted_sum: term must be scalar, got shape "
                    << node->val.shape_str());
    s += w * node->val.v[0];
  }
  Node *o = tape.make(Tensor::scalar(s));
  o->back = [o, terms]() {
    for (const auto &[node, w] : terms) node->grad.v[0] += w * o->grad.v[0];
  };
  return o;
}

}  // namespace blxam::ops

#endif  // BLXAM_OPS_HPP_
