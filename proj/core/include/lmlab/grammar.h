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

#ifndef LMLAB_GRAMMAR_H_
#define LMLAB_GRAMMAR_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmlab/rng.h"

namespace lmlab {

using SymbolId = int;

struct Rule {
  SymbolId lhs = -1;
  std::vector<SymbolId> rhs;
  double prob = 1.0;  // meaningful only when the grammar is probabilistic
};

// A node is either a terminal leaf (rule == -1, no children) or a nonterminal
// expanded by `rule`. [begin, end) is the span of leaves it covers.
struct ParseTree {
  SymbolId symbol = -1;
  int rule = -1;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<ParseTree> children;

  bool is_leaf() const { return children.empty(); }
  std::vector<SymbolId> Leaves() const;
  // Recomputes begin/end for the whole tree, leaves numbered from `first`.
  void AssignSpans(std::size_t first = 0);
};

class Grammar {
 public:
  // Text format, one rule per line:
  //   LHS -> sym sym ... [p]
  // '#' starts a comment. Optional directives: "%start S" and
  // "%nonterminals A B ...". Without %start the first rule's lhs is the start
  // symbol; without %nonterminals every lhs symbol is a nonterminal. Either
  // every rule carries a probability or none does.
  static Grammar Parse(std::string_view text, std::string_view source = "<grammar>");
  // Shipped fixtures: "fig3" (arithmetic expressions), "fig3_pcfg" (the same
  // with probabilities), "toy_ss" (S -> S S | a), "toy_ab" and "toy_paren".
  static Grammar Builtin(std::string_view name);
  static std::vector<std::string> BuiltinNames();
  // Loads a builtin by name, otherwise reads the file at `name_or_path`.
  static Grammar Load(const std::string& name_or_path);

  // Assembles a grammar directly. Validation of duplicates can be skipped for
  // derived grammars such as CNF forms, which may hold parallel rules.
  static Grammar FromParts(std::vector<std::string> symbols, std::vector<bool> terminal,
                           SymbolId start, std::vector<Rule> rules, bool probabilistic,
                           bool allow_duplicates = false);

  const std::vector<std::string>& symbols() const { return symbols_; }
  const std::string& name(SymbolId s) const { return symbols_.at(s); }
  bool is_terminal(SymbolId s) const { return terminal_.at(s); }
  SymbolId start() const { return start_; }
  const std::vector<Rule>& rules() const { return rules_; }
  bool probabilistic() const { return probabilistic_; }
  std::optional<SymbolId> Find(std::string_view name) const;
  std::vector<SymbolId> Nonterminals() const;
  std::vector<SymbolId> Terminals() const;
  // Rule indices with the given lhs, in file order.
  const std::vector<int>& RulesFor(SymbolId lhs) const { return by_lhs_.at(lhs); }

  // Same rules, probability 1/k for each of the k rules of every lhs.
  Grammar WithUniformProbabilities() const;
  std::string ToText() const;
  std::string RuleText(int rule) const;

  // Maps whitespace-separated terminals to ids; unknown tokens are a data
  // error naming the token.
  std::vector<SymbolId> Tokenize(std::string_view text) const;
  std::string Join(std::span<const SymbolId> tokens) const;

 private:
  void Index();
  void Validate(bool allow_duplicates) const;

  std::vector<std::string> symbols_;
  std::vector<bool> terminal_;
  SymbolId start_ = -1;
  std::vector<Rule> rules_;
  bool probabilistic_ = false;
  std::vector<std::vector<int>> by_lhs_;
};

// Sum of log rule probabilities over the internal nodes.
double TreeLogProb(const Grammar& g, const ParseTree& tree);
// Bracketed form, e.g. (EXPR (TERM (VALUE y)) + (EXPR ...)).
std::string TreeToString(const Grammar& g, const ParseTree& tree);
// Checks that every internal node matches its rule and the leaves are
// terminals; returns an explanation on failure.
std::optional<std::string> CheckTree(const Grammar& g, const ParseTree& tree);

struct Generated {
  std::vector<SymbolId> tokens;
  ParseTree tree;
  std::size_t restarts = 0;
};

// Leftmost derivation choosing rules by probability. A derivation that needs
// more than `max_expansions` rule applications is discarded and restarted;
// after `max_restarts` discards generation fails.
Generated Generate(const Grammar& g, Rng& rng, std::size_t max_expansions = 10000,
                   std::size_t max_restarts = 1000);

// Number of edges on the tree path between every pair of leaves.
std::vector<std::vector<int>> TreeDistanceMatrix(const ParseTree& tree);

}  // namespace lmlab

#endif  // LMLAB_GRAMMAR_H_
