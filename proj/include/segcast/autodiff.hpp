// Copyright 2026 The segcast Authors.
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

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "segcast/parameters.hpp"
#include "segcast/tensor.hpp"

namespace segcast::ad {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  double item() const { return value().item(); }
};

// Tape of operation records. Nodes are appended in creation order, which is a
// topological order, so backward() walks the tape once in reverse.
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into Parameter::grad.
  Var param(Parameter& p);

  Var record(const char* op, Tensor value, std::vector<std::size_t> parents, Backward backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of a node after backward(); zeros if nothing flowed into it.
  Tensor grad(Var v) const;
  // Accumulator for backward closures; allocated on first use.
  Tensor& grad_acc(std::size_t id);
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

  // Module name attached to errors raised while this scope is active.
  class Scope {
   public:
    Scope(Graph& g, std::string module) : g_(g), saved_(std::move(g.scope_)) { g_.scope_ = std::move(module); }
    ~Scope() { g_.scope_ = std::move(saved_); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph& g_;
    std::string saved_;
  };
  const std::string& scope() const { return scope_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    const char* op = "";
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  std::string scope_ = "tensor-autodiff";
  bool backward_done_ = false;
};

// Elementwise binary ops with numpy-style broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var square(Var a);
Var abs(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var gelu(Var a);

// [m x k] * [k x n] -> [m x n]
Var matmul(Var a, Var b);
// x [N x in], w [out x in], optional b [out] -> x w^T + b
Var linear(Var x, Var w, std::optional<Var> b = std::nullopt);
// Batched [B x m x k] * [B x k x n], or * [B x n x k]^T when transpose_b.
Var bmm(Var a, Var b, bool transpose_b = false);

Var sum(Var a);
Var mean(Var a);
Var sum_axis(Var a, std::size_t axis);
Var mean_axis(Var a, std::size_t axis);

// Max-subtracted softmax along `axis`.
Var softmax(Var a, std::size_t axis);

struct TopK {
  Var gate;
  std::size_t k = 0;
  // Row-major N x k; within a row, indices ascend.
  std::vector<std::size_t> indices;
};
// Keeps the k largest entries of each row of scores [N x E] (ties to the lowest
// index) and zeros the rest. Gradient flows only through retained entries.
TopK topk_mask(Var scores, std::size_t k);

Var reshape(Var a, Shape shape);
Var permute(Var a, const std::vector<std::size_t>& axes);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);
Var broadcast_to(Var a, const Shape& shape);

// Normalizes over the last axis, then applies gamma/beta of that extent.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

Var mse_loss(Var pred, Var target);
Var mae_loss(Var pred, Var target);

// Pure tensor helpers shared with non-differentiable code.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace segcast::ad
