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

#ifndef LMLAB_CNF_H_
#define LMLAB_CNF_H_

#include <vector>

#include "lmlab/grammar.h"

namespace lmlab {

// Where a CNF rule came from in the source grammar.
struct CnfOrigin {
  // Source rule whose rhs this rule (or a piece of it) realises; -1 for the
  // T -> t rules that lift a terminal out of a long rhs.
  int source_rule = -1;
  // Source unit rules applied, top-down, before `source_rule`.
  std::vector<int> unit_chain;
  // 0 for the rule carrying the source lhs, k > 0 for the k-th binarization
  // continuation.
  int piece = 0;
};

struct CnfGrammar {
  Grammar source;
  Grammar grammar;                // only A -> B C and A -> t rules
  std::vector<CnfOrigin> origin;  // one per CNF rule
  std::vector<SymbolId> source_symbol;  // CNF symbol -> source symbol, -1 if fresh
  std::vector<SymbolId> from_source;    // source symbol -> CNF symbol

  // Translates a token string over the source grammar's symbol ids.
  std::vector<SymbolId> MapTokens(std::span<const SymbolId> source_tokens) const;
  // Rebuilds the source-grammar tree a CNF derivation stands for.
  ParseTree Restore(const ParseTree& cnf_tree) const;
};

// Lifts terminals out of long right-hand sides, binarizes them with fresh
// symbols and folds unit chains into the rules they lead to. Every source
// derivation maps to exactly one CNF derivation with the same probability, so
// string probabilities are preserved. Empty right-hand sides are unsupported.
CnfGrammar ToCnf(const Grammar& g);

bool IsCnf(const Grammar& g);

}  // namespace lmlab

#endif  // LMLAB_CNF_H_
