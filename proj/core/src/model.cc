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

#include <algorithm>
#include <cmath>

#include "lmlab/model.h"
#include "lmlab/text.h"

namespace lmlab {

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransformer:
      return "transformer";
    case ModelKind::kRnn:
      return "rnn";
    case ModelKind::kFfnLm:
      return "ffn";
  }
  return "unknown";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "transformer") return ModelKind::kTransformer;
  if (name == "rnn") return ModelKind::kRnn;
  if (name == "ffn" || name == "ffn_lm") return ModelKind::kFfnLm;
  Fail(ErrorKind::kConfig,
       "unknown model kind '" + std::string(name) + "' (expected transformer, rnn or ffn)");
}

const Tensor& NeuralModel::param(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  Fail(ErrorKind::kContract, "no parameter named '" + std::string(name) + "'");
}

Tensor& NeuralModel::param(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).param(name));
}

void NeuralModel::AllocateParams() {
  params_.clear();
  for (const auto& s : Shapes()) params_.push_back({s.name, Tensor(s.shape)});
}

void NeuralModel::InitParams(Rng& rng) {
  const auto shapes = Shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Tensor& t = params_[i].value;
    if (shapes[i].is_bias) {
      t.Fill(0);
      continue;
    }
    const double stddev = 1.0 / std::sqrt(static_cast<double>(t.cols()));
    for (auto& x : t.data()) x = static_cast<Real>(rng.Normal(0.0, stddev));
  }
}

std::size_t NeuralModel::ParamCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Var> NeuralModel::Bind(Tape& tape, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.Leaf(p.value, requires_grad));
  return vars;
}

Tensor NeuralModel::ForwardValues(std::span<const TokenId> ids, ForwardCapture* capture) const {
  Tape tape;
  const auto vars = Bind(tape, false);
  return Forward(tape, vars, ids, ids.size(), capture).value();
}

std::vector<Real> NeuralModel::NextLogits(std::span<const TokenId> prefix) const {
  std::vector<TokenId> input;
  input.reserve(prefix.size() + 1);
  input.push_back(Vocab::kBos);
  input.insert(input.end(), prefix.begin(), prefix.end());
  const std::size_t w = window();
  std::span<const TokenId> view(input);
  if (view.size() > w) view = view.subspan(view.size() - w);
  const Tensor logits = ForwardValues(view);
  const auto last = logits.row(logits.rows() - 1);
  return {last.begin(), last.end()};
}

std::vector<double> NeuralModel::SequenceLogProbs(std::span<const TokenId> ids) const {
  const std::size_t n = ids.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  // Position i of `full` predicts ids[i].
  std::vector<TokenId> full;
  full.reserve(n);
  full.push_back(Vocab::kBos);
  full.insert(full.end(), ids.begin(), ids.end() - 1);

  const std::size_t w = window();
  const std::size_t keep = w - std::max<std::size_t>(1, w / 2);
  std::size_t pos = 0;
  while (pos < n) {
    const std::size_t start = pos < w ? 0 : pos - keep;
    const std::size_t end = std::min(start + w, n);
    const Tensor logits =
        ForwardValues(std::span<const TokenId>(full).subspan(start, end - start));
    for (std::size_t i = pos; i < end; ++i) {
      const auto row = logits.row(i - start);
      const auto logp = LogSoftmaxValues(row);
      out[i] = logp[static_cast<std::size_t>(ids[i])];
    }
    pos = end;
  }
  return out;
}

}  // namespace lmlab
