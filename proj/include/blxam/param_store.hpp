// blxam/param_store.hpp

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

#ifndef BLXAM_PARAM_STORE_HPP_
#define BLXAM_PARAM_STORE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "blxam/error.hpp"
#include "blxam/hash.hpp"
#include "blxam/rng.hpp"
#include "blxam/tape.hpp"
#include "blxam/tensor.hpp"

namespace blxam {

/// One named parameter with its gradient accumulator and Adam state.
/// grad_live records whether any backward pass has deposited into grad
/// since the last optimizer step (a zero gradient still counts).
struct Param {
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  std::uint64_t step = 0;
  bool grad_live = false;

  explicit Param(Tensor init)
      : value(std::move(init)),
        grad(value.shape),
        m(value.shape),
        v(value.shape) {}
};

/// Glorot/Xavier uniform init for a [fan_in x fan_out] matrix.
inline Tensor glorot_uniform(Rng &rng, std::size_t fan_in,
                             std::size_t fan_out) {
  double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (auto &x : t.v) x = rng.uniform(-a, a);
  return t;
}

class ParameterStore {
 public:
  Param &create(const std::string &name, Tensor init) {
    BLXAM_CHECK(!params_.count(name),
                "parameter '" << name << "' already registered");
    auto [it, ok] = params_.emplace(name, Param(std::move(init)));
    (void)ok;
    return it->second;
  }

  bool has(const std::string &name) const { return params_.count(name) > 0; }

  Param &get(const std::string &name) {
    auto it = params_.find(name);
    BLXAM_CHECK(it != params_.end(), "unknown parameter '" << name << "'");
    return it->second;
  }
  const Param &get(const std::string &name) const {
    auto it = params_.find(name);
    BLXAM_CHECK(it != params_.end(), "unknown parameter '" << name << "'");
    return it->second;
  }

  /// Tracked leaf node for a parameter: backward accumulates the node's
  /// gradient into the store and marks it live.
  Node *node(Tape &tape, const std::string &name) {
    Param &p = get(name);
    Node *n = tape.make(p.value);
    Param *pp = &p;
    n->back = [n, pp]() {
      for (std::size_t i = 0; i < n->grad.v.size(); ++i)
        pp->grad.v[i] += n->grad.v[i];
      pp->grad_live = true;
    };
    return n;
  }

  void zero_grads() {
    for (auto &[name, p] : params_) {
      p.grad.fill(0.0);
      p.grad_live = false;
    }
  }

  /// One Adam step with bias correction over parameters selected by
  /// `trainable` (all when empty). Every selected parameter must have
  /// received a gradient since the last step. All gradients are cleared
  /// afterwards, selected or not.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8,
                 const std::function<bool(const std::string &)> &trainable =
                     {}) {
    for (auto &[name, p] : params_) {
      if (trainable && !trainable(name)) continue;
      BLXAM_CHECK(p.grad_live,
                  "adam_step: missing gradient for parameter '" << name << "'");
      p.step += 1;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.step));
      for (std::size_t i = 0; i < p.value.v.size(); ++i) {
        const double g = p.grad.v[i];
        p.m.v[i] = beta1 * p.m.v[i] + (1.0 - beta1) * g;
        p.v.v[i] = beta2 * p.v.v[i] + (1.0 - beta2) * g * g;
        const double mhat = p.m.v[i] / bc1;
        const double vhat = p.v.v[i] / bc2;
        p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
    zero_grads();
  }

  /// FNV-1a over all parameter value bytes in name order. Useful for
  /// freeze checks and determinism assertions.
  std::uint64_t value_checksum() const {
    std::uint64_t h = kFnvOffsetBasis;
    for (const auto &[name, p] : params_) {
      h = fnv1a64(name.data(), name.size(), h);
      h = fnv1a64(p.value.v.data(), p.value.v.size() * sizeof(double), h);
    }
    return h;
  }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto &[name, p] : params_) n += p.value.numel();
    return n;
  }

  std::map<std::string, Param> &params() { return params_; }
  const std::map<std::string, Param> &params() const { return params_; }

 private:
  std::map<std::string, Param> params_;  // ordered: deterministic iteration
};

}  // namespace blxam

#endif  // BLXAM_PARAM_STORE_HPP_
