// Copyright 2026 The lmlab Authors.
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

#ifndef LMLAB_TAPE_H_
#define LMLAB_TAPE_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <vector>

#include "lmlab/tensor.h"

namespace lmlab {

using NodeId = std::int32_t;

class Tape;

// Handle to a value recorded on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

// Dynamic reverse-mode recording tape. Nodes are appended in evaluation order,
// so every node's inputs have smaller ids. A tape is confined to one thread.
class Tape {
 public:
  // Called with the gradient of the node's output; accumulates into inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Leaf(Tensor value, bool requires_grad = true);
  Var Constant(Tensor value) { return Leaf(std::move(value), false); }

  // Records an op result. `backward` is dropped if no input needs a gradient.
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Accumulation buffer for the gradient of a node, zero-initialised on first use.
  Tensor& GradBuffer(NodeId id);

  // Runs the reverse sweep from a scalar loss. Gradients of every reached node
  // stay available through grad().
  void Backward(Var loss);

  // Reverse sweep returning gradients for `params`; unreached params get zeros.
  std::map<NodeId, Tensor> Backward(Var loss, std::span<const Var> params);

  // Gradient after Backward(); zeros if the node was not reached.
  Tensor grad(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace lmlab

#endif  // LMLAB_TAPE_H_
