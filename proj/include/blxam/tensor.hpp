// blxam/tensor.hpp

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

#ifndef BLXAM_TENSOR_HPP_
#define BLXAM_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "blxam/error.hpp"

namespace blxam {

// Dense row-major tensor of 64-bit floats. Gradients live beside values in
// the tape nodes and the parameter store, not in the tensor itself.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    v.assign(numel(shape), 0.0);
  }

  Tensor(std::vector<std::size_t> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    BLXAM_CHECK(v.size() == numel(shape),
                "tensor data length " << v.size() << " does not match shape "
                                      << shape_str(shape));
  }

  static std::size_t numel(const std::vector<std::size_t> &s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  std::size_t numel() const { return v.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t size(std::size_t axis) const {
    BLXAM_CHECK(axis < shape.size(),
                "size(): axis " << axis << " out of range for rank " << rank());
    return shape[axis];
  }

  std::size_t rows() const {
    BLXAM_CHECK(rank() == 2, "rows(): tensor is rank " << rank());
    return shape[0];
  }
  std::size_t cols() const {
    BLXAM_CHECK(rank() == 2, "cols(): tensor is rank " << rank());
    return shape[1];
  }

  double *row(std::size_t i) { return v.data() + i * shape.back(); }
  const double *row(std::size_t i) const { return v.data() + i * shape.back(); }

  double &at(std::size_t i, std::size_t j) { return v[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * shape[1] + j]; }

  bool same_shape(const Tensor &o) const { return shape == o.shape; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  static std::string shape_str(const std::vector<std::size_t> &s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " x " : "") << s[i];
    os << "]";
    return os.str();
  }
  std::string shape_str() const { return shape_str(shape); }
};

/// Row-major rank-2 construction from nested braces, test convenience.
inline Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t m = rows.size();
  std::size_t n = m ? rows.begin()->size() : 0;
  Tensor t({m, n});
  std::size_t i = 0;
  for (const auto &r : rows) {
    BLXAM_CHECK(r.size() == n, "matrix(): ragged rows");
    for (double x : r) t.v[i++] = x;
  }
  return t;
}

}  // namespace blxam

#endif  // BLXAM_TENSOR_HPP_
