/*
 * Copyright 2026 The EDS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "eds/numerics/tensor.hpp"

namespace eds {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// that produced it is alive and has not been cleared.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  // Gradient accumulated by the last Tape::backward; zeros if the node was
  // not reached.
  Tensor grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of a computation for reverse-mode differentiation.
// Nodes are created in topological order, so a reverse sweep over node ids
// visits every consumer before its inputs.
class Tape {
 public:
  // Propagates the node's gradient into its parents' accumulators.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn fn);

  // Seeds d(root)/d(root) = 1 and sweeps backwards. `root` must be a
  // single-element node of this tape.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() > 0; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  // Gradient accumulator of `id`, allocated as zeros on first use.
  Tensor& grad_accumulator(std::size_t id);
  // Adds `g` to the gradient of `id`; the first contribution is copied.
  void accumulate(std::size_t id, const Eigen::Ref<const Eigen::VectorXd>& g);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var square(Var a);
Var relu(Var a);
Var sigmoid(Var a);

// Sum of all elements as a single-element node.
Var sum(Var a);

// (rows x inner) * (inner x cols); `a` is viewed with dim(0) rows.
Var matmul(Var a, Var b);
// Adds `bias` (length = last dimension of `x`) to every row.
Var add_bias(Var x, Var bias);
// (n, ...) -> (n, prod(...)).
Var flatten(Var x);

// Valid-padding, stride-1 convolution. x: (n, h, w, cin),
// weight: (kh, kw, cin, cout), bias: (cout).
Var conv2d(Var x, Var weight, Var bias);
// Non-overlapping window x window max pooling over (n, h, w, c).
Var max_pool2d(Var x, Index window);

// Mean over the batch of -log2 softmax(logits)[label].
Var softmax_cross_entropy_bits(Var logits, std::span<const int> labels);
// Mean binary cross-entropy in bits of sigmoid(logits[:, 0]) vs targets.
Var sigmoid_cross_entropy_bits(Var logits, std::span<const int> targets);
// Sum over rows of logits(i, columns[i]).
Var pick_sum(Var logits, std::span<const int> columns);

// Row-wise softmax of a (n, k) tensor.
RowMatrixXd softmax_rows(const Eigen::Ref<const RowMatrixXd>& logits);

}  // namespace eds
