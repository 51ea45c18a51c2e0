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

#include "lmlab/ffn_lm.h"

#include "lmlab/config_text.h"
#include "lmlab/text.h"

namespace lmlab {

void FfnLmConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, "ffn config: " + msg); };
  if (vocab_size < 1) bad("vocab_size must be >= 1");
  if (dim < 1) bad("dim must be >= 1");
  if (context < 1) bad("context must be >= 1");
  if (hidden < 1) bad("hidden must be >= 1");
}

std::string FfnLmConfig::ToText() const {
  return "vocab_size=" + std::to_string(vocab_size) + "\ndim=" + std::to_string(dim) +
         "\ncontext=" + std::to_string(context) + "\nhidden=" + std::to_string(hidden) + "\n";
}

FfnLmConfig FfnLmConfig::FromText(std::string_view text) {
  const KeyValues kv = KeyValues::Parse(text);
  kv.RejectUnknown({"vocab_size", "dim", "context", "hidden"}, "ffn config");
  FfnLmConfig c;
  c.vocab_size = kv.GetUInt("vocab_size", c.vocab_size);
  c.dim = kv.GetUInt("dim", c.dim);
  c.context = kv.GetUInt("context", c.context);
  c.hidden = kv.GetUInt("hidden", c.hidden);
  c.Validate();
  return c;
}

FfnLmModel::FfnLmModel(FfnLmConfig config) : config_(std::move(config)) {
  config_.Validate();
  AllocateParams();
}

std::vector<ParamShape> FfnLmModel::Shapes() const {
  const auto& c = config_;
  return {{"embed", {c.vocab_size, c.dim}},
          {"w0", {c.hidden, c.context * c.dim}},
          {"b0", {c.hidden}, true},
          {"w1", {c.dim, c.hidden}},
          {"b1", {c.dim}, true}};
}

Var FfnLmModel::Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
                        std::size_t seq_len, ForwardCapture* capture) const {
  (void)tape;
  const auto& c = config_;
  if (params.size() != 5) {
    Fail(ErrorKind::kContract, "ffn forward: expected 5 bound parameters");
  }
  if (seq_len == 0 || inputs.empty() || inputs.size() % seq_len != 0) {
    Fail(ErrorKind::kContract, "ffn forward: inputs must be whole blocks of seq_len");
  }
  const std::size_t n = inputs.size();
  const Var embed = params[0];
  // Slot t of row r holds the token t - (L-1) positions from r.
  std::vector<Var> slots;
  std::vector<TokenId> ids(n);
  for (std::size_t t = 0; t < c.context; ++t) {
    const std::size_t back = c.context - 1 - t;
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = r % seq_len;
      ids[r] = back <= i ? inputs[r - back] : Vocab::kBos;
    }
    slots.push_back(GatherRows(embed, ids));
  }
  const Var x = slots.size() == 1 ? slots[0] : ConcatCols(slots);
  const Var h = Relu(AddRowBias(MatMulNT(x, params[1]), params[2]));
  const Var out = AddRowBias(MatMulNT(h, params[3]), params[4]);
  if (capture != nullptr) {
    capture->labels = {"input", "hidden", "output"};
    capture->activations = {x.value(), h.value(), out.value()};
    capture->attention.clear();
  }
  return MatMulNT(out, embed);
}

std::vector<Real> FfnLmForward(const FfnLmModel& model, std::span<const TokenId> window) {
  if (window.size() != model.config().context) {
    Fail(ErrorKind::kContract, "ffn_lm_forward: window must hold exactly L=" +
                                   std::to_string(model.config().context) + " ids, got " +
                                   std::to_string(window.size()));
  }
  const Tensor logits = model.ForwardValues(window);
  const auto last = logits.row(logits.rows() - 1);
  return {last.begin(), last.end()};
}

}  // namespace lmlab
