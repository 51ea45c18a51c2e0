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

#include "lmlab/cnf.h"

#include <functional>
#include <map>
#include <set>

namespace lmlab {
namespace {

struct HeadRule {
  std::vector<SymbolId> rhs;  // CNF symbols, one terminal or two nonterminals
  int source_rule;
  double prob;
};

std::string FreshName(const std::string& base, const std::set<std::string>& taken) {
  std::string name = base;
  while (taken.contains(name)) name += "'";
  return name;
}

}  // namespace

CnfGrammar ToCnf(const Grammar& g) {
  const auto& src = g.rules();
  std::vector<std::string> symbols = g.symbols();
  std::vector<bool> terminal;
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    terminal.push_back(g.is_terminal(static_cast<SymbolId>(s)));
  }
  std::set<std::string> taken(symbols.begin(), symbols.end());
  auto add_symbol = [&](const std::string& base) {
    const std::string name = FreshName(base, taken);
    taken.insert(name);
    symbols.push_back(name);
    terminal.push_back(false);
    return static_cast<SymbolId>(symbols.size() - 1);
  };

  std::vector<Rule> rules;
  std::vector<CnfOrigin> origin;
  std::map<SymbolId, SymbolId> lifted;
  auto lift = [&](SymbolId t) {
    if (auto it = lifted.find(t); it != lifted.end()) return it->second;
    const SymbolId id = add_symbol("<" + g.name(t) + ">");
    lifted.emplace(t, id);
    rules.push_back({id, {t}, 1.0});
    origin.push_back({-1, {}, 0});
    return id;
  };

  // Non-unit rules of each source nonterminal, reduced to their head piece.
  std::vector<std::vector<HeadRule>> heads(g.symbols().size());
  for (std::size_t r = 0; r < src.size(); ++r) {
    const Rule& rule = src[r];
    if (rule.rhs.empty()) {
      Fail(ErrorKind::kUnsupported, "to_cnf: rule " + g.RuleText(static_cast<int>(r)) +
                                        " has an empty right-hand side");
    }
    const int ri = static_cast<int>(r);
    if (rule.rhs.size() == 1) {
      if (g.is_terminal(rule.rhs[0])) heads[rule.lhs].push_back({rule.rhs, ri, rule.prob});
      continue;
    }
    std::vector<SymbolId> rhs;
    for (SymbolId s : rule.rhs) rhs.push_back(g.is_terminal(s) ? lift(s) : s);
    const std::size_t m = rhs.size();
    if (m == 2) {
      heads[rule.lhs].push_back({rhs, ri, rule.prob});
      continue;
    }
    std::vector<SymbolId> fresh;
    for (std::size_t k = 1; k + 1 < m; ++k) {
      fresh.push_back(add_symbol(g.name(rule.lhs) + "|" + std::to_string(r) + "." +
                                 std::to_string(k)));
    }
    heads[rule.lhs].push_back({{rhs[0], fresh[0]}, ri, rule.prob});
    for (std::size_t k = 1; k + 1 < m; ++k) {
      const SymbolId right = k + 2 < m ? fresh[k] : rhs[k + 1];
      rules.push_back({fresh[k - 1], {rhs[k], right}, 1.0});
      origin.push_back({ri, {}, static_cast<int>(k)});
    }
  }

  // Fold unit chains A -> B -> ... into copies of the head rules they reach.
  for (SymbolId a : g.Nonterminals()) {
    std::vector<int> chain;
    std::function<void(SymbolId, double)> walk = [&](SymbolId b, double q) {
      for (const auto& h : heads[b]) {
        rules.push_back({a, h.rhs, q * h.prob});
        origin.push_back({h.source_rule, chain, 0});
      }
      for (int u : g.RulesFor(b)) {
        const Rule& rule = src[u];
        if (rule.rhs.size() != 1 || g.is_terminal(rule.rhs[0])) continue;
        chain.push_back(u);
        walk(rule.rhs[0], q * rule.prob);
        chain.pop_back();
      }
    };
    walk(a, 1.0);
  }

  CnfGrammar out;
  out.source = g;
  const std::size_t n_src = g.symbols().size();
  out.source_symbol.resize(symbols.size(), -1);
  out.from_source.resize(n_src);
  for (std::size_t s = 0; s < n_src; ++s) {
    out.source_symbol[s] = static_cast<SymbolId>(s);
    out.from_source[s] = static_cast<SymbolId>(s);
  }
  out.grammar = Grammar::FromParts(std::move(symbols), std::move(terminal), g.start(),
                                   std::move(rules), g.probabilistic(), true);
  out.origin = std::move(origin);
  return out;
}

bool IsCnf(const Grammar& g) {
  for (const auto& r : g.rules()) {
    if (r.rhs.size() == 1 && g.is_terminal(r.rhs[0])) continue;
    if (r.rhs.size() == 2 && !g.is_terminal(r.rhs[0]) && !g.is_terminal(r.rhs[1])) continue;
    return false;
  }
  return true;
}

std::vector<SymbolId> CnfGrammar::MapTokens(std::span<const SymbolId> source_tokens) const {
  std::vector<SymbolId> out;
  out.reserve(source_tokens.size());
  for (SymbolId s : source_tokens) out.push_back(from_source.at(s));
  return out;
}

ParseTree CnfGrammar::Restore(const ParseTree& cnf_tree) const {
  const Grammar& c = grammar;
  std::function<ParseTree(const ParseTree&)> convert;
  std::function<ParseTree(const ParseTree&)> restore_node = [&](const ParseTree& n) {
    const CnfOrigin& o = origin.at(n.rule);
    if (o.source_rule < 0 || o.piece != 0) {
      Fail(ErrorKind::kContract, "cnf restore: node '" + c.name(n.symbol) +
                                     "' does not start a source rule");
    }
    const int r = o.source_rule;
    std::vector<const ParseTree*> parts;
    const ParseTree* cur = &n;
    // Terminal heads have one child; binary heads unroll through fresh nodes.
    if (cur->children.size() == 1) {
      parts.push_back(&cur->children[0]);
    } else {
      for (;;) {
        parts.push_back(&cur->children[0]);
        const ParseTree& right = cur->children[1];
        const bool continues = !right.is_leaf() && origin.at(right.rule).source_rule == r &&
                               origin.at(right.rule).piece > 0;
        if (!continues) {
          parts.push_back(&right);
          break;
        }
        cur = &right;
      }
    }
    ParseTree node;
    node.symbol = source.rules()[r].lhs;
    node.rule = r;
    node.children.reserve(parts.size());
    for (const ParseTree* p : parts) node.children.push_back(convert(*p));
    for (auto it = o.unit_chain.rbegin(); it != o.unit_chain.rend(); ++it) {
      ParseTree wrap;
      wrap.symbol = source.rules()[*it].lhs;
      wrap.rule = *it;
      wrap.children.push_back(std::move(node));
      node = std::move(wrap);
    }
    return node;
  };
  convert = [&](const ParseTree& p) {
    if (p.is_leaf()) {
      ParseTree leaf;
      leaf.symbol = source_symbol.at(p.symbol);
      return leaf;
    }
    if (origin.at(p.rule).source_rule < 0) {
      ParseTree leaf;
      leaf.symbol = source_symbol.at(p.children.at(0).symbol);
      return leaf;
    }
    return restore_node(p);
  };
  ParseTree out = restore_node(cnf_tree);
  out.AssignSpans();
  return out;
}

}  // namespace lmlab
