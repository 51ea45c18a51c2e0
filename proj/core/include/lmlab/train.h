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

#ifndef LMLAB_TRAIN_H_
#define LMLAB_TRAIN_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmlab/config_text.h"
#include "lmlab/model.h"

namespace lmlab {

struct TrainConfig {
  double learning_rate = 1e-3;    // eta
  std::size_t batch_tokens = 4096;
  std::size_t steps = 1000;       // ignored when epochs > 0
  std::size_t epochs = 0;
  std::uint64_t seed = 1;
  double weight_decay = 0;        // lambda
  double clip_norm = 1.0;         // global gradient norm cap, 0 disables
  std::string optimizer = "sgd";  // sgd | adam
  double momentum = 0;            // sgd only
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  bool cosine = false;            // cosine decay of eta to 0 over the run
  std::size_t eval_every = 100;
  double eval_fraction = 0.1;     // contiguous tail held out
  std::size_t eval_tokens = 0;    // cap on tokens per eval pass, 0 means all
  std::size_t workers = 1;        // data-parallel gradient shards

  void Validate() const;
  std::string ToText() const;
  static const std::set<std::string>& Keys();
  // Reads the keys in Keys(); other keys are left to the caller.
  static TrainConfig FromKeyValues(const KeyValues& kv);
};

struct EvalPoint {
  std::size_t step = 0;
  std::string split;  // "train" or "test"
  double loss = 0;
  std::optional<double> accuracy;
  double wall_ms = 0;
};

struct RunRecord {
  std::vector<EvalPoint> evals;
  std::size_t steps_done = 0;
  bool diverged = false;
  std::string divergence;  // message naming the step
  double wall_ms = 0;

  // First eval step at which `split` accuracy reached `threshold`.
  std::optional<std::size_t> FirstStepReaching(const std::string& split, double threshold) const;
};

// JSON-lines, one object per metric: {format_version, step, split, metric, value}.
// Wall-clock figures are excluded so the file is reproducible.
void WriteMetricsJsonl(std::ostream& out, const RunRecord& record);
void WriteTimingJsonl(std::ostream& out, const RunRecord& record);
// step,split,loss,accuracy rows with a header.
void WriteSummaryCsv(std::ostream& out, const RunRecord& record);

// Mean of -log softmax(logits)[target] over rows, in nats.
double CrossEntropyValue(const Tensor& logits, std::span<const TokenId> targets,
                         double temperature = 1.0);

// Seeds the model's parameters from `seed` under a fixed label.
void InitModel(NeuralModel& model, std::uint64_t seed);

// A set of equal-length blocks. Loss is the weighted mean over positions;
// inputs, targets and weights have one entry per position.
struct Batch {
  std::size_t seq_len = 0;
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<Real> weights;

  std::size_t blocks() const { return seq_len == 0 ? 0 : inputs.size() / seq_len; }
};

struct GradResult {
  double loss = 0;          // weighted mean
  double weight = 0;        // total weight
  std::vector<Tensor> grads;  // one per parameter, of the weighted-mean loss
};

GradResult ComputeGradients(const NeuralModel& model, const Batch& batch);
// Splits the batch into `shards` contiguous block ranges, differentiates each
// on its own thread and combines the results in shard order.
GradResult ComputeGradientsSharded(const NeuralModel& model, const Batch& batch,
                                   std::size_t shards);

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const ParamList& params, std::size_t total_steps);

  // One update with the step's learning rate. A non-finite gradient fails
  // with a numeric error naming the step.
  void Step(ParamList& params, std::vector<Tensor>& grads, std::size_t step);
  double LearningRate(std::size_t step) const;

 private:
  TrainConfig config_;
  std::size_t total_steps_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Plain update theta <- theta - eta * clip(g) - eta * lambda * theta.
void SgdStep(ParamList& params, std::vector<Tensor>& grads, const TrainConfig& config,
             std::size_t step);

// Scales `grads` so their joint L2 norm is at most max_norm. Returns the norm
// before clipping.
double ClipGlobalNorm(std::vector<Tensor>& grads, double max_norm);

using EvalCallback = std::function<void(const EvalPoint&)>;

struct StreamSplit {
  std::size_t train_end = 0;  // targets [0, train_end) train, the rest test
};

StreamSplit SplitStream(std::size_t length, double eval_fraction);

// Blocks of length L over stream[begin, end): block b predicts
// stream[begin + bL .. begin + (b+1)L) from the preceding tokens (BOS before
// position 0). A short final block is padded with zero weight.
std::vector<std::size_t> BlockStarts(std::size_t begin, std::size_t end, std::size_t seq_len);
Batch MakeStreamBatch(std::span<const TokenId> stream, std::span<const std::size_t> starts,
                      std::size_t end, std::size_t seq_len);

// Trains on a token stream with the tail held out.
RunRecord TrainOnStream(NeuralModel& model, std::span<const TokenId> stream,
                        const TrainConfig& config, const EvalCallback& on_eval = {});

struct TaskExample {
  std::vector<TokenId> prompt;
  TokenId answer = 0;
};

// Batch scoring only the answer position of each example. Inputs are
// [BOS] + prompt; shorter prompts are right-padded with zero weight.
Batch MakeTaskBatch(std::span<const TaskExample> examples);

struct TaskScore {
  double loss = 0;
  double accuracy = 0;
};

TaskScore ScoreTask(const NeuralModel& model, std::span<const TaskExample> examples);

RunRecord TrainOnTask(NeuralModel& model, std::span<const TaskExample> train,
                      std::span<const TaskExample> test, const TrainConfig& config,
                      const EvalCallback& on_eval = {});

}  // namespace lmlab

#endif  // LMLAB_TRAIN_H_
