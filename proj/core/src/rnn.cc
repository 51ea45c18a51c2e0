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

#include "lmlab/rnn.h"

#include "lmlab/config_text.h"
#include "lmlab/text.h"

namespace lmlab {

void RnnConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, "rnn config: " + msg); };
  if (vocab_size < 1) bad("vocab_size must be >= 1");
  if (dim < 1) bad("dim must be >= 1");
  if (recent < 1) bad("recent must be >= 1");
  if (hidden < 1) bad("hidden must be >= 1");
  if (window < 1) bad("window must be >= 1");
}

std::string RnnConfig::ToText() const {
  return "vocab_size=" + std::to_string(vocab_size) + "\ndim=" + std::to_string(dim) +
         "\nstate=" + std::to_string(state) + "\nrecent=" + std::to_string(recent) +
         "\nhidden=" + std::to_string(hidden) + "\nwindow=" + std::to_string(window) + "\n";
}

RnnConfig RnnConfig::FromText(std::string_view text) {
  const KeyValues kv = KeyValues::Parse(text);
  kv.RejectUnknown({"vocab_size", "dim", "state", "recent", "hidden", "window"}, "rnn config");
  RnnConfig c;
  c.vocab_size = kv.GetUInt("vocab_size", c.vocab_size);
  c.dim = kv.GetUInt("dim", c.dim);
  c.state = kv.GetUInt("state", c.state);
  c.recent = kv.GetUInt("recent", c.recent);
  c.hidden = kv.GetUInt("hidden", c.hidden);
  c.window = kv.GetUInt("window", c.window);
  c.Validate();
  return c;
}

Var RnnCell(const RnnCellParams& params, Var state, Var recent) {
  Var x = recent;
  if (state.value().cols() > 0) {
    const Var parts[] = {state, recent};
    x = ConcatCols(parts);
  }
  const Var h = Relu(AddRowBias(MatMulNT(x, params.w0), params.b0));
  return AddRowBias(MatMulNT(h, params.w1), params.b1);
}

RnnModel::RnnModel(RnnConfig config) : config_(std::move(config)) {
  config_.Validate();
  AllocateParams();
}

std::vector<ParamShape> RnnModel::Shapes() const {
  const auto& c = config_;
  return {{"embed", {c.vocab_size, c.dim}},
          {"w0", {c.hidden, c.input_dim()}},
          {"b0", {c.hidden}, true},
          {"w1", {c.dim + c.state, c.hidden}},
          {"b1", {c.dim + c.state}, true}};
}

RnnStepResult RnnStep(const RnnModel& model, const Tensor& state, const Tensor& recent) {
  const auto& c = model.config();
  if (state.size() != c.state || recent.size() != c.recent * c.dim) {
    Fail(ErrorKind::kDimension, "rnn_step: expected state of " + std::to_string(c.state) +
                                    " and " + std::to_string(c.recent) + "x" +
                                    std::to_string(c.dim) + " recent inputs, got " +
                                    state.ShapeString() + " and " + recent.ShapeString());
  }
  Tape tape;
  const auto vars = model.Bind(tape, false);
  const Var s = tape.Constant(Tensor(std::vector<std::size_t>{1, c.state},
                                     {state.data().begin(), state.data().end()}));
  const Var r = tape.Constant(Tensor(std::vector<std::size_t>{1, c.recent * c.dim},
                                     {recent.data().begin(), recent.data().end()}));
  const Var out = RnnCell({vars[1], vars[2], vars[3], vars[4]}, s, r);
  const Var v = SliceCols(out, 0, c.dim);
  const Tensor logits = MatMulNT(v, vars[0]).value();
  RnnStepResult result;
  result.logits.assign(logits.data().begin(), logits.data().end());
  result.next_state = Tensor::Vector(std::vector<Real>(out.value().data().begin() + c.dim,
                                                       out.value().data().end()));
  return result;
}

Var RnnModel::Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
                      std::size_t seq_len, ForwardCapture* capture) const {
  const auto& c = config_;
  if (params.size() != 5) {
    Fail(ErrorKind::kContract, "rnn forward: expected 5 bound parameters");
  }
  if (seq_len == 0 || inputs.empty() || inputs.size() % seq_len != 0) {
    Fail(ErrorKind::kContract, "rnn forward: inputs must be whole blocks of seq_len");
  }
  if (seq_len > c.window) {
    Fail(ErrorKind::kContract, "rnn forward: sequence of length " + std::to_string(seq_len) +
                                   " exceeds window L=" + std::to_string(c.window));
  }
  const std::size_t blocks = inputs.size() / seq_len;
  const RnnCellParams cell{params[1], params[2], params[3], params[4]};
  const Var embed = params[0];

  Var state = tape.Constant(Tensor({blocks, c.state}));
  std::vector<Var> outputs;
  std::vector<TokenId> ids(blocks);
  if (capture != nullptr) {
    capture->labels = {"state"};
    capture->activations.assign(1, Tensor({inputs.size(), c.state}));
    capture->attention.clear();
  }
  for (std::size_t i = 0; i < seq_len; ++i) {
    std::vector<Var> recent;
    for (std::size_t back = 0; back < c.recent; ++back) {
      for (std::size_t b = 0; b < blocks; ++b) {
        ids[b] = back <= i ? inputs[b * seq_len + i - back] : Vocab::kBos;
      }
      recent.push_back(GatherRows(embed, ids));
    }
    const Var r = recent.size() == 1 ? recent[0] : ConcatCols(recent);
    const Var out = RnnCell(cell, state, r);
    outputs.push_back(SliceCols(out, 0, c.dim));
    if (c.state > 0) state = SliceCols(out, c.dim, c.state);
    if (capture != nullptr) {
      for (std::size_t b = 0; b < blocks; ++b) {
        const auto src = state.value().row(b);
        std::copy(src.begin(), src.end(), capture->activations[0].row(b * seq_len + i).begin());
      }
    }
  }
  // Rows are step-major here; reorder to block-major.
  const Var stacked = outputs.size() == 1 ? outputs[0] : ConcatRows(outputs);
  Var v = stacked;
  if (blocks > 1) {
    std::vector<TokenId> order(inputs.size());
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t i = 0; i < seq_len; ++i) {
        order[b * seq_len + i] = static_cast<TokenId>(i * blocks + b);
      }
    }
    v = GatherRows(stacked, order);
  }
  return MatMulNT(v, embed);
}

}  // namespace lmlab
