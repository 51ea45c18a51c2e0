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

#ifndef LMLAB_LANGUAGE_MODEL_H_
#define LMLAB_LANGUAGE_MODEL_H_

#include <optional>
#include <span>
#include <vector>

#include "lmlab/tensor.h"

namespace lmlab {

// Anything that yields next-token conditionals. A BOS token is implied in
// front of every prefix, so the first real token is also conditioned.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;

  // Unnormalised log-weights over the vocabulary for the token after
  // `prefix`. Impossible tokens may be -inf.
  virtual std::vector<Real> NextLogits(std::span<const TokenId> prefix) const = 0;

  // log P(ids[i] | ids[0..i)) for each i, natural log. The default calls
  // NextLogits once per position.
  virtual std::vector<double> SequenceLogProbs(std::span<const TokenId> ids) const;
};

// Uniform distribution over a fixed vocabulary.
class UniformModel final : public LanguageModel {
 public:
  explicit UniformModel(std::size_t vocab_size);
  std::size_t vocab_size() const override { return vocab_size_; }
  std::vector<Real> NextLogits(std::span<const TokenId> prefix) const override;

 private:
  std::size_t vocab_size_;
};

struct PerplexityResult {
  double cross_entropy = 0;  // nats per token, >= 0
  double perplexity = 1;     // exp(cross_entropy)
  std::size_t tokens = 0;
  // First position with zero model probability; both figures are +inf then.
  std::optional<std::size_t> zero_probability_position;
};

// L = -(1/N) sum_i log P(w_i | prefix), perplexity = exp(L).
PerplexityResult Perplexity(const LanguageModel& model, std::span<const TokenId> ids);

// Plain-vector softmax with inverse temperature beta, max-shifted.
std::vector<double> SoftmaxValues(std::span<const Real> logits, double beta = 1.0);
// log softmax, with -inf entries preserved.
std::vector<double> LogSoftmaxValues(std::span<const Real> logits);

}  // namespace lmlab

#endif  // LMLAB_LANGUAGE_MODEL_H_
