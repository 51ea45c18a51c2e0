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

#ifndef LMLAB_NGRAM_H_
#define LMLAB_NGRAM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmlab/language_model.h"
#include "lmlab/text.h"

namespace lmlab {

// Count-based order-N model with add-k smoothing:
//   P(w | c) = (count(c w) + k) / (total(c) + k |W|)
// Contexts are the previous N-1 ids, BOS-padded at the start of a sequence.
class NGramModel final : public LanguageModel {
 public:
  struct ContextCounts {
    std::map<TokenId, std::uint64_t> next;
    std::uint64_t total = 0;
  };
  using Context = std::vector<TokenId>;

  static NGramModel Fit(std::span<const TokenId> ids, std::size_t order, double k,
                        std::size_t vocab_size);

  // nullopt when the distribution is undefined (k = 0 and unseen context).
  // Contexts shorter than N-1 are BOS-padded, longer ones truncated.
  std::optional<double> CondProb(std::span<const TokenId> context, TokenId w) const;

  std::size_t vocab_size() const override { return vocab_size_; }
  std::vector<Real> NextLogits(std::span<const TokenId> prefix) const override;
  std::vector<double> SequenceLogProbs(std::span<const TokenId> ids) const override;

  std::size_t order() const { return order_; }
  double k() const { return k_; }
  const std::map<Context, ContextCounts>& counts() const { return counts_; }
  std::uint64_t Count(std::span<const TokenId> context, TokenId w) const;
  std::uint64_t ContextTotal(std::span<const TokenId> context) const;

  // Sorted "context<TAB>token<TAB>count" lines; context ids joined by spaces,
  // or token strings when a vocabulary is given.
  std::string Dump(const Vocab* vocab = nullptr) const;

 private:
  NGramModel(std::size_t order, double k, std::size_t vocab_size)
      : order_(order), k_(k), vocab_size_(vocab_size) {}
  Context MakeContext(std::span<const TokenId> prefix) const;

  std::size_t order_;
  double k_;
  std::size_t vocab_size_;
  std::map<Context, ContextCounts> counts_;
};

}  // namespace lmlab

#endif  // LMLAB_NGRAM_H_
