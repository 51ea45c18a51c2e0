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

#ifndef LMLAB_RNN_H_
#define LMLAB_RNN_H_

#include <memory>
#include <string>
#include <utility>

#include "lmlab/model.h"

namespace lmlab {

// The recurrence (v_{i+1}, s_{i+1}) = F(s_i, u_i, ..., u_{i-k+1}) with F a
// one-hidden-layer relu network. v_{i+1} lives in embedding space and is
// decoded against the embedding table.
struct RnnConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 32;     // p, embedding dim
  std::size_t state = 32;   // q_s
  std::size_t recent = 1;   // k embedded inputs fed to each step
  std::size_t hidden = 128;
  std::size_t window = 32;  // longest unroll per forward pass

  std::size_t input_dim() const { return state + recent * dim; }

  void Validate() const;
  std::string ToText() const;
  static RnnConfig FromText(std::string_view text);
};

struct RnnCellParams {
  Var w0;  // [hidden x (q_s + k p)]
  Var b0;  // [hidden]
  Var w1;  // [(p + q_s) x hidden]
  Var b1;  // [p + q_s]
};

// One application of F to rows of [state | recent inputs]. Returns the
// [v | next state] rows.
Var RnnCell(const RnnCellParams& params, Var state, Var recent);

struct RnnStepResult {
  std::vector<Real> logits;
  Tensor next_state;
};

// Plain single step on tensors: `recent` holds the k embedded inputs, newest
// first, as a [k x p] matrix.
RnnStepResult RnnStep(const class RnnModel& model, const Tensor& state, const Tensor& recent);

class RnnModel final : public NeuralModel {
 public:
  explicit RnnModel(RnnConfig config);

  const RnnConfig& config() const { return config_; }

  ModelKind kind() const override { return ModelKind::kRnn; }
  std::string ConfigText() const override { return config_.ToText(); }
  std::size_t window() const override { return config_.window; }
  std::size_t vocab_size() const override { return config_.vocab_size; }
  std::vector<ParamShape> Shapes() const override;
  Var Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
              std::size_t seq_len, ForwardCapture* capture = nullptr) const override;
  std::unique_ptr<NeuralModel> Clone() const override {
    return std::make_unique<RnnModel>(*this);
  }

 private:
  RnnConfig config_;
};

}  // namespace lmlab

#endif  // LMLAB_RNN_H_
