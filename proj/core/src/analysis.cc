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

#include "lmlab/analysis.h"

#include <algorithm>
#include <cmath>

#include "lmlab/text.h"

namespace lmlab {

ActivationTrace CaptureActivations(const NeuralModel& model, std::span<const TokenId> ids,
                                   std::span<const std::size_t> layers, bool with_attention) {
  ForwardCapture cap;
  model.ForwardValues(ids, &cap);
  ActivationTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  std::vector<std::size_t> chosen(layers.begin(), layers.end());
  if (chosen.empty()) {
    for (std::size_t i = 0; i < cap.activations.size(); ++i) chosen.push_back(i);
  }
  for (std::size_t l : chosen) {
    if (l >= cap.activations.size()) {
      Fail(ErrorKind::kConfig, "capture: layer index " + std::to_string(l) +
                                   " out of range (model exposes " +
                                   std::to_string(cap.activations.size()) + " layers)");
    }
    trace.layer_index.push_back(l);
    trace.labels.push_back(cap.labels[l]);
    trace.layers.push_back(cap.activations[l]);
  }
  if (with_attention) trace.attention = std::move(cap.attention);
  return trace;
}

ProbeSentence ProbeSentenceFor(const NeuralModel& model, std::size_t layer,
                               std::span<const TokenId> ids, const ParseTree& tree) {
  ProbeSentence s;
  s.distances = TreeDistanceMatrix(tree);
  if (s.distances.size() != ids.size()) {
    Fail(ErrorKind::kDimension, "probe: tree has " + std::to_string(s.distances.size()) +
                                    " leaves for " + std::to_string(ids.size()) + " tokens");
  }
  std::vector<TokenId> input{Vocab::kBos};
  input.insert(input.end(), ids.begin(), ids.end());
  const std::size_t layers[] = {layer};
  const ActivationTrace trace = CaptureActivations(model, input, layers);
  const Tensor& full = trace.layers[0];
  s.vectors = Tensor({ids.size(), full.cols()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy(full.row(i + 1).begin(), full.row(i + 1).end(), s.vectors.row(i).begin());
  }
  return s;
}

InductionReport InductionScore(const NeuralModel& model, std::span<const TaskExample> examples) {
  InductionReport report;
  report.examples = examples.size();
  if (examples.empty()) return report;
  std::size_t correct = 0;
  double mass = 0;
  bool has_attention = false;
  for (const auto& ex : examples) {
    std::vector<TokenId> input;
    input.push_back(Vocab::kBos);
    input.insert(input.end(), ex.prompt.begin(), ex.prompt.end());
    ForwardCapture cap;
    const Tensor logits = model.ForwardValues(input, &cap);
    const auto last = logits.row(logits.rows() - 1);
    const auto best = std::max_element(last.begin(), last.end()) - last.begin();
    if (best == ex.answer) ++correct;

    const TokenId a = ex.prompt.back();
    const auto first = std::find(ex.prompt.begin(), ex.prompt.end(), a) - ex.prompt.begin();
    const std::size_t a_pos = static_cast<std::size_t>(first) + 1;  // shifted by BOS
    const std::size_t b_pos = a_pos + 1;
    const std::size_t i = input.size() - 1;
    double top = 0;
    for (const auto& layer : cap.attention) {
      if (layer.weights.empty()) continue;
      has_attention = true;
      for (const Tensor& w : layer.weights[0]) {
        top = std::max({top, static_cast<double>(w.at(i, a_pos)),
                        static_cast<double>(w.at(i, b_pos))});
      }
    }
    mass += top;
  }
  const auto n = static_cast<double>(examples.size());
  report.accuracy = static_cast<double>(correct) / n;
  if (has_attention) report.attention_mass = mass / n;
  return report;
}

TransformerModel CopyMatchTransformer(std::size_t vocab_size, std::size_t window) {
  constexpr double kPositionGain = 100;
  constexpr double kMatchGain = 50;
  if (vocab_size == 0) Fail(ErrorKind::kConfig, "copy-match transformer: empty vocabulary");
  const std::size_t kHead = std::max<std::size_t>(32, vocab_size + vocab_size % 2);
  TransformerConfig c;
  c.vocab_size = vocab_size;
  c.dim = 4 * kHead;
  c.pos_dim = kHead;
  c.window = window;
  c.layers = 3;
  c.heads = 4;
  c.hidden = 1;
  c.tied_decoder = false;
  TransformerModel model(c);
  for (auto& p : model.params()) p.value.Fill(0);
  const std::size_t word = kHead, prev = 0, copy = 2 * kHead, pos = 3 * kHead;
  Tensor& embed = model.param("embed");
  for (std::size_t w = 0; w < vocab_size; ++w) embed.at(w, word + w) = 1;

  // Layer 0, head 0: query R pe(i) = pe(i-1), key pe(j); the score peaks at j = i-1.
  Tensor& q0 = model.param("layer0.query");
  Tensor& k0 = model.param("layer0.key");
  for (std::size_t k = 0; k < kHead / 2; ++k) {
    const double freq = std::pow(10000.0, 2.0 * static_cast<double>(k + 1) / kHead);
    const double cs = std::cos(1 / freq), sn = std::sin(1 / freq);
    const std::size_t a = 2 * k, b = 2 * k + 1;
    q0.at(a, pos + a) = static_cast<Real>(kPositionGain * cs);
    q0.at(a, pos + b) = static_cast<Real>(kPositionGain * sn);
    q0.at(b, pos + b) = static_cast<Real>(kPositionGain * cs);
    q0.at(b, pos + a) = static_cast<Real>(-kPositionGain * sn);
    k0.at(a, pos + a) = 1;
    k0.at(b, pos + b) = 1;
  }
  Tensor& v0 = model.param("layer0.value");
  for (std::size_t w = 0; w < vocab_size; ++w) v0.at(prev + w, word + w) = 1;

  // Layer 2, head 2: token at i against the previous-token slot at j.
  Tensor& q2 = model.param("layer2.query");
  Tensor& k2 = model.param("layer2.key");
  Tensor& v2 = model.param("layer2.value");
  for (std::size_t w = 0; w < vocab_size; ++w) {
    q2.at(copy + w, word + w) = static_cast<Real>(kMatchGain);
    k2.at(copy + w, prev + w) = 1;
    v2.at(copy + w, word + w) = 1;
  }
  Tensor& decoder = model.param("decoder");
  for (std::size_t w = 0; w < vocab_size; ++w) decoder.at(w, copy + w) = 1;
  return model;
}

}  // namespace lmlab
