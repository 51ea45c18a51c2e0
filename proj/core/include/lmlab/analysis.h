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

#ifndef LMLAB_ANALYSIS_H_
#define LMLAB_ANALYSIS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmlab/grammar.h"
#include "lmlab/model.h"
#include "lmlab/probe.h"
#include "lmlab/train.h"
#include "lmlab/transformer.h"

namespace lmlab {

struct ActivationTrace {
  std::vector<TokenId> ids;
  std::vector<std::size_t> layer_index;  // positions in the model's capture list
  std::vector<std::string> labels;
  std::vector<Tensor> layers;            // each [len x width]
  // attention[l] for transformer layer l, [block 0][head] -> len x len.
  std::vector<AttentionCapture> attention;
};

// Runs one forward pass over `ids` as given (no BOS is added) and keeps the
// selected layers, all of them when `layers` is empty. Index 0 is the input
// construction. The model's outputs are unaffected.
ActivationTrace CaptureActivations(const NeuralModel& model, std::span<const TokenId> ids,
                                   std::span<const std::size_t> layers = {},
                                   bool with_attention = false);

// Activations of `layer` for [BOS] + ids, one row per word (the BOS row is
// dropped), paired with the tree's leaf distances.
ProbeSentence ProbeSentenceFor(const NeuralModel& model, std::size_t layer,
                               std::span<const TokenId> ids, const ParseTree& tree);

struct InductionReport {
  double accuracy = 0;
  // Mean over examples of the largest attention weight, over all heads, from
  // the final A onto the earlier A or B. Absent for models without attention.
  std::optional<double> attention_mass;
  std::size_t examples = 0;
};

InductionReport InductionScore(const NeuralModel& model, std::span<const TaskExample> examples);

// Hand-set weights for the copy-match mechanism with H=4 heads of width
// q = max(32, V rounded up to even), p = 4q, d_pos = q, and layers
// attention, FFN (all zero), attention. Layer 0 head 0 attends to the
// previous position and writes its token into dims [0, V). Layer 2 head 2
// matches the current token against those previous-token slots and copies the
// matched position's token into dims [2q, 2q+V), which the decoder reads.
// Word one-hots live in dims [q, q+V).
TransformerModel CopyMatchTransformer(std::size_t vocab_size, std::size_t window);

}  // namespace lmlab

#endif  // LMLAB_ANALYSIS_H_
