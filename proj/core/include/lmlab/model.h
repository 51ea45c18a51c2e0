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

#ifndef LMLAB_MODEL_H_
#define LMLAB_MODEL_H_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmlab/language_model.h"
#include "lmlab/ops.h"
#include "lmlab/rng.h"
#include "lmlab/tape.h"

namespace lmlab {

enum class ModelKind { kTransformer, kRnn, kFfnLm };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

struct NamedTensor {
  std::string name;
  Tensor value;
};

using ParamList = std::vector<NamedTensor>;

struct ParamShape {
  std::string name;
  std::vector<std::size_t> shape;
  bool is_bias = false;
};

// Activations recorded during a forward pass. Index 0 is the model input;
// entry l + 1 is the output of layer l.
struct ForwardCapture {
  std::vector<std::string> labels;
  std::vector<Tensor> activations;
  // attention[l] holds the weights of layer l (empty for non-attention
  // layers), indexed [block][head].
  std::vector<AttentionCapture> attention;
};

// A trainable next-token model. Forward() maps stacked token blocks to one row
// of logits per input position; row i of a block predicts the token after
// position i and depends only on positions <= i of that block.
class NeuralModel : public LanguageModel {
 public:
  virtual ModelKind kind() const = 0;
  // Canonical key=value text that fully determines the parameter shapes.
  virtual std::string ConfigText() const = 0;
  // Longest context window a single forward pass accepts.
  virtual std::size_t window() const = 0;
  virtual std::vector<ParamShape> Shapes() const = 0;

  // `inputs` holds inputs.size() / seq_len blocks of seq_len ids each.
  virtual Var Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
                      std::size_t seq_len, ForwardCapture* capture = nullptr) const = 0;

  virtual std::unique_ptr<NeuralModel> Clone() const = 0;

  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  const Tensor& param(std::string_view name) const;
  Tensor& param(std::string_view name);

  // Weights ~ Normal(0, 1/fan_in) with fan_in the number of columns; biases 0.
  void InitParams(Rng& rng);
  std::size_t ParamCount() const;

  // Puts every parameter on the tape as a leaf, in params() order.
  std::vector<Var> Bind(Tape& tape, bool requires_grad) const;

  // Logits for the last position of [BOS] + prefix (truncated to window()).
  std::vector<Real> NextLogits(std::span<const TokenId> prefix) const override;
  // Scores [BOS] + ids with overlapping windows; each token after the first
  // window sees at least window()/2 tokens of context.
  std::vector<double> SequenceLogProbs(std::span<const TokenId> ids) const override;

  // Logits rows for a single block without recording gradients.
  Tensor ForwardValues(std::span<const TokenId> ids, ForwardCapture* capture = nullptr) const;

 protected:
  void AllocateParams();

  ParamList params_;
};

std::unique_ptr<NeuralModel> MakeModel(ModelKind kind, std::string_view config_text);

// Checkpoint: "TLMC" | u32 format version | string kind | string config text |
// u32 tensor count | per tensor: string name, tensor in the TLM1 format.
void SaveCheckpoint(const NeuralModel& model, const std::string& path);
std::string CheckpointBytes(const NeuralModel& model);
std::unique_ptr<NeuralModel> LoadCheckpoint(const std::string& path);
// Loads parameters into an existing model; a different kind or config is an error.
void LoadCheckpointInto(NeuralModel& model, const std::string& path);

// Sum over the checkpoint's tensors of their element counts, read back from disk.
std::uint64_t CheckpointParamCount(const std::string& path);

}  // namespace lmlab

#endif  // LMLAB_MODEL_H_
