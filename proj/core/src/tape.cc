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

#include "lmlab/tape.h"

#include <utility>

namespace lmlab {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::Leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::Record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) Fail(ErrorKind::kContract, "Tape::Record: input from another tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Tensor& Tape::GradBuffer(NodeId id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) Fail(ErrorKind::kContract, "backward: loss is not on this tape");
  if (loss.value().size() != 1) {
    Fail(ErrorKind::kContract,
         "backward: loss must be a scalar, got shape " + loss.value().ShapeString());
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  GradBuffer(loss.id()).Fill(Real{1});
  for (NodeId id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    // Callbacks only touch buffers of earlier nodes; nodes_ is not resized here.
    node.backward(*this, node.grad);
  }
}

std::map<NodeId, Tensor> Tape::Backward(Var loss, std::span<const Var> params) {
  for (const Var& p : params) {
    if (p.tape() != this) Fail(ErrorKind::kContract, "backward: parameter not on this tape");
  }
  Backward(loss);
  std::map<NodeId, Tensor> out;
  for (const Var& p : params) out.emplace(p.id(), grad(p));
  return out;
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.has_grad) return node.grad;
  return Tensor(node.value.shape());
}

}  // namespace lmlab
