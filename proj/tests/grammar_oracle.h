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

#ifndef LMLAB_TESTS_GRAMMAR_ORACLE_H_
#define LMLAB_TESTS_GRAMMAR_ORACLE_H_

#include <map>
#include <vector>

#include "lmlab/grammar.h"

namespace lmlab::testing {

struct StringMass {
  double prob = 0;   // sum over derivations
  int trees = 0;     // number of derivations
  double best = 0;   // largest single-derivation probability
};

// Every leftmost derivation from the start symbol whose string has at most
// max_len tokens, grouped by string. Requires no empty right-hand sides and
// no unit cycles, so each sentential form symbol yields at least one token.
inline std::map<std::vector<SymbolId>, StringMass> EnumerateDerivations(const Grammar& g,
                                                                       std::size_t max_len) {
  std::map<std::vector<SymbolId>, StringMass> out;
  struct Form {
    std::vector<SymbolId> symbols;
    double prob;
  };
  std::vector<Form> stack{{{g.start()}, 1.0}};
  while (!stack.empty()) {
    Form f = std::move(stack.back());
    stack.pop_back();
    std::size_t k = 0;
    while (k < f.symbols.size() && g.is_terminal(f.symbols[k])) ++k;
    if (k == f.symbols.size()) {
      auto& m = out[f.symbols];
      m.prob += f.prob;
      m.trees += 1;
      m.best = std::max(m.best, f.prob);
      continue;
    }
    for (int ri : g.RulesFor(f.symbols[k])) {
      const Rule& r = g.rules()[ri];
      if (f.symbols.size() - 1 + r.rhs.size() > max_len) continue;
      Form next;
      next.symbols.assign(f.symbols.begin(), f.symbols.begin() + static_cast<std::ptrdiff_t>(k));
      next.symbols.insert(next.symbols.end(), r.rhs.begin(), r.rhs.end());
      next.symbols.insert(next.symbols.end(), f.symbols.begin() + static_cast<std::ptrdiff_t>(k) + 1,
                          f.symbols.end());
      next.prob = f.prob * (g.probabilistic() ? r.prob : 1.0);
      stack.push_back(std::move(next));
    }
  }
  return out;
}

// Calls f on every string of length 1..max_len over `alphabet`.
template <typename F>
void ForEachString(const std::vector<SymbolId>& alphabet, std::size_t max_len, F&& f) {
  std::vector<SymbolId> s;
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::size_t> digits(len, 0);
    s.assign(len, alphabet[0]);
    while (true) {
      f(s);
      std::size_t i = 0;
      while (i < len && ++digits[i] == alphabet.size()) {
        digits[i] = 0;
        s[i] = alphabet[0];
        ++i;
      }
      if (i == len) break;
      s[i] = alphabet[digits[i]];
    }
  }
}

}  // namespace lmlab::testing

#endif  // LMLAB_TESTS_GRAMMAR_ORACLE_H_
