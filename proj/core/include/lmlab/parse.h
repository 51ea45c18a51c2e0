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

#ifndef LMLAB_PARSE_H_
#define LMLAB_PARSE_H_

#include <optional>
#include <span>
#include <vector>

#include "lmlab/cnf.h"

namespace lmlab {

struct CykResult {
  ParseTree tree;  // over the CNF grammar
  double log_prob = 0;
};

// Best derivation of `tokens` (CNF symbol ids) by dynamic programming over
// spans. Ties go to the lowest rule index, then the leftmost split. For a
// non-probabilistic grammar all rules weigh 1 and any witness is returned.
// nullopt when the string is not derivable.
std::optional<CykResult> CykParse(const Grammar& cnf, std::span<const SymbolId> tokens);

// CYK on the CNF form, mapped back to a source-grammar tree. `tokens` are
// source symbol ids.
std::optional<ParseTree> ParseBest(const CnfGrammar& cnf, std::span<const SymbolId> tokens);

// log of the total probability of all derivations of `tokens` from the start
// symbol; -inf when the string has probability zero.
double InsideLogProb(const Grammar& cnf, std::span<const SymbolId> tokens);

// Expected number of uses of each CNF rule in a derivation of `tokens`,
// from the inside and outside passes. All zeros when the string has
// probability zero.
std::vector<double> RulePosteriors(const Grammar& cnf, std::span<const SymbolId> tokens);

struct EntropyEstimate {
  double nats_per_token = 0;
  double standard_error = 0;
  std::size_t samples = 0;
  double mean_length = 0;  // tokens per string, separator included if counted
  std::size_t restarts = 0;
};

// Monte Carlo estimate of E[-log P(s)] / E[|s|] over strings drawn from the
// grammar. With count_separator each string's length includes one end marker,
// matching a corpus in which strings are separated by EOS. A sampled string
// longer than kMaxEntropyStringTokens is an unsupported error: the inside
// chart grows quadratically, and such lengths signal a critical or
// supercritical grammar whose per-token rate the ratio estimator cannot pin
// down.
inline constexpr std::size_t kMaxEntropyStringTokens = 1024;
EntropyEstimate GrammarEntropyFloor(const Grammar& g, std::size_t samples, Rng& rng,
                                    bool count_separator = false);

}  // namespace lmlab

#endif  // LMLAB_PARSE_H_
