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

#ifndef LMLAB_TASKS_H_
#define LMLAB_TASKS_H_

#include <iosfwd>
#include <utility>
#include <vector>

#include "lmlab/grammar.h"
#include "lmlab/rng.h"
#include "lmlab/text.h"
#include "lmlab/train.h"

namespace lmlab {

struct TaskDataset {
  Vocab vocab;
  std::vector<TaskExample> train;
  std::vector<TaskExample> test;
};

// Prompts "a + b =" over tokens "0".."m-1", "+", "=", answer (a + b) mod m.
// With train_fraction = 1 every pair goes to train and test is empty.
struct ModularAddConfig {
  std::size_t modulus = 97;
  double train_fraction = 0.5;
  std::size_t samples = 0;  // 0 means the exhaustive m*m table
};

TaskDataset MakeModularAdd(const ModularAddConfig& config, Rng& rng);
TaskExample ModularAddExample(const Vocab& vocab, std::size_t a, std::size_t b,
                              std::size_t modulus);

// Sequences of content tokens "t0".."t{k-1}" of a fixed length that end in A
// and contain the bigram "A B" exactly once earlier; every other position is
// filler drawn from the remaining tokens. The answer is B. Ordered pairs
// (A, B) are split so test pairs never occur in training.
struct InductionConfig {
  std::size_t content_tokens = 16;
  std::size_t length = 16;  // prompt length
  double heldout_fraction = 0.25;
  std::size_t train_examples = 4096;
  std::size_t test_examples = 512;
};

struct InductionDataset : TaskDataset {
  std::vector<std::pair<TokenId, TokenId>> train_pairs;
  std::vector<std::pair<TokenId, TokenId>> test_pairs;
};

InductionDataset MakeInduction(const InductionConfig& config, Rng& rng);
TaskExample InductionExample(const InductionConfig& config, TokenId a, TokenId b,
                             std::span<const TokenId> content, Rng& rng);

// Strings sampled from a probabilistic grammar, each followed by EOS, until
// the stream holds at least `min_tokens` tokens. The vocabulary lists the
// grammar's terminals in symbol order.
struct GrammarCorpus {
  Vocab vocab;
  std::vector<TokenId> stream;
  std::vector<std::vector<TokenId>> strings;
  std::vector<ParseTree> trees;
  std::size_t restarts = 0;
};

GrammarCorpus MakeGrammarCorpus(const Grammar& g, std::size_t min_tokens, Rng& rng,
                                std::size_t max_expansions = 10000);

// {"prompt": [ids], "answer": id} per line.
void WriteTaskJsonl(std::ostream& out, std::span<const TaskExample> examples);
std::vector<TaskExample> ReadTaskJsonl(std::istream& in);

}  // namespace lmlab

#endif  // LMLAB_TASKS_H_
