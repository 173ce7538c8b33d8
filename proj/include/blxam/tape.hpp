// blxam/tape.hpp

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

#ifndef BLXAM_TAPE_HPP_
#define BLXAM_TAPE_HPP_

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/tensor.hpp"

// Define-by-run reverse-mode tape. Each recorded op allocates an output
// node whose `back` closure pulls from the node's gradient into its input
// nodes' gradients. Creation order is a valid topological order, so the
// backward sweep is simply the reverse scan. The tape is rebuilt every
// step and cleared by backward().

namespace blxam {

struct Node {
  Tensor val;
  Tensor grad;                  // same shape, zero-initialized
  std::function<void()> back;   // empty for leaves without a gradient sink

  explicit Node(Tensor v) : val(std::move(v)), grad(val.shape) {}
};

class Tape {
 public:
  /// Record a new node holding `val`. Gradient starts at zero.
  Node *make(Tensor val) {
    nodes_.push_back(std::make_unique<Node>(std::move(val)));
    return nodes_.back().get();
  }

  /// Constant input: participates in the graph, gradient is discarded.
  Node *leaf(Tensor t) { return make(std::move(t)); }

  /// Input whose gradient should outlive the tape: on backward the node's
  /// gradient is accumulated into *grad_out (which must stay alive and
  /// match shape).
  Node *leaf_grad(Tensor t, Tensor *grad_out) {
    BLXAM_CHECK(grad_out != nullptr, "leaf_grad: null gradient sink");
    BLXAM_CHECK(grad_out->shape == t.shape,
                "leaf_grad: sink shape " << grad_out->shape_str()
                                         << " != value shape " << t.shape_str());
    Node *n = make(std::move(t));
    n->back = [n, grad_out]() {
      for (std::size_t i = 0; i < n->grad.v.size(); ++i)
        grad_out->v[i] += n->grad.v[i];
    };
    return n;
  }

  /// Seed the scalar loss gradient with `seed` and run the reverse sweep,
  /// then clear the tape for reuse. Gradients survive only in external
  /// sinks (leaf_grad targets, parameter stores).
  void backward(Node *loss, double seed = 1.0) {
    BLXAM_CHECK(loss != nullptr, "backward: null loss node");
    BLXAM_CHECK(loss->val.numel() == 1,
                "backward: loss must be scalar, got shape "
                    << loss->val.shape_str());
    loss->grad.v[0] += seed;
    for (std::size_t i = nodes_.size(); i-- > 0;)
      if (nodes_[i]->back) nodes_[i]->back();
    clear();
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace blxam

#endif  // BLXAM_TAPE_HPP_
