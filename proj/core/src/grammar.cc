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

#include "lmlab/grammar.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lmlab/config_text.h"

namespace lmlab {
namespace {

constexpr double kProbTolerance = 1e-9;

struct Builtin {
  const char* name;
  const char* text;
};

constexpr Builtin kBuiltins[] = {
    {"fig3",
     "# Arithmetic expressions\n"
     "EXPR -> TERM + EXPR\n"
     "EXPR -> ( EXPR )\n"
     "EXPR -> TERM\n"
     "TERM -> VALUE * TERM\n"
     "TERM -> ( EXPR )\n"
     "TERM -> VALUE\n"
     "VALUE -> x\n"
     "VALUE -> y\n"
     "VALUE -> 1\n"},
    {"fig3_pcfg",
     "# Arithmetic expressions; a VALUE is a number 75% of the time\n"
     "EXPR -> TERM + EXPR [0.3]\n"
     "EXPR -> ( EXPR ) [0.1]\n"
     "EXPR -> TERM [0.6]\n"
     "TERM -> VALUE * TERM [0.3]\n"
     "TERM -> ( EXPR ) [0.1]\n"
     "TERM -> VALUE [0.6]\n"
     "VALUE -> x [0.125]\n"
     "VALUE -> y [0.125]\n"
     "VALUE -> 1 [0.75]\n"},
    {"toy_ss",
     "S -> S S [0.4]\n"
     "S -> a [0.6]\n"},
    {"toy_ab",
     "S -> A B [0.4]\n"
     "S -> B A [0.3]\n"
     "S -> S S [0.2]\n"
     "S -> a [0.1]\n"
     "A -> a [1]\n"
     "B -> b [1]\n"},
    {"toy_paren",
     "S -> ( S ) [0.2]\n"
     "S -> S + T [0.2]\n"
     "S -> T [0.6]\n"
     "T -> F [0.7]\n"
     "T -> T * F [0.3]\n"
     "F -> x [0.5]\n"
     "F -> y [0.5]\n"},
};

std::vector<std::string> SplitWhitespace(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void LineError(std::string_view source, std::size_t line, const std::string& msg) {
  Fail(ErrorKind::kData, std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

void CollectLeaves(const ParseTree& t, std::vector<SymbolId>& out) {
  if (t.is_leaf()) {
    out.push_back(t.symbol);
    return;
  }
  for (const auto& c : t.children) CollectLeaves(c, out);
}

}  // namespace

std::vector<SymbolId> ParseTree::Leaves() const {
  std::vector<SymbolId> out;
  CollectLeaves(*this, out);
  return out;
}

void ParseTree::AssignSpans(std::size_t first) {
  begin = first;
  if (is_leaf()) {
    end = first + 1;
    return;
  }
  std::size_t pos = first;
  for (auto& c : children) {
    c.AssignSpans(pos);
    pos = c.end;
  }
  end = pos;
}

Grammar Grammar::Parse(std::string_view text, std::string_view source) {
  struct RawRule {
    std::string lhs;
    std::vector<std::string> rhs;
    std::optional<double> prob;
    std::size_t line;
  };
  std::vector<RawRule> raw;
  std::optional<std::string> start;
  std::optional<std::set<std::string>> declared;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto toks = SplitWhitespace(line);
    if (toks.empty()) continue;
    if (toks[0] == "%start") {
      if (toks.size() != 2) LineError(source, line_no, "%start takes exactly one symbol");
      start = toks[1];
      continue;
    }
    if (toks[0] == "%nonterminals") {
      declared.emplace(toks.begin() + 1, toks.end());
      continue;
    }
    if (toks[0].starts_with('%')) LineError(source, line_no, "unknown directive " + toks[0]);
    if (toks.size() < 2 || toks[1] != "->") {
      LineError(source, line_no, "expected 'LHS -> symbols [p]'");
    }
    RawRule r{toks[0], {}, std::nullopt, line_no};
    std::size_t end = toks.size();
    const std::string& last = toks.back();
    if (end > 2 && last.size() >= 2 && last.front() == '[' && last.back() == ']') {
      const std::string num = last.substr(1, last.size() - 2);
      char* stop = nullptr;
      const double p = std::strtod(num.c_str(), &stop);
      if (num.empty() || stop != num.c_str() + num.size() || !std::isfinite(p) || p < 0 ||
          p > 1) {
        LineError(source, line_no, "bad rule probability '" + last + "'");
      }
      r.prob = p;
      --end;
    }
    r.rhs.assign(toks.begin() + 2, toks.begin() + static_cast<std::ptrdiff_t>(end));
    if (r.rhs.empty()) {
      LineError(source, line_no, "empty right-hand side (epsilon rules are not supported)");
    }
    raw.push_back(std::move(r));
  }
  if (raw.empty()) Fail(ErrorKind::kData, std::string(source) + ": grammar has no rules");

  std::set<std::string> lhs_names;
  for (const auto& r : raw) {
    if (declared && !declared->contains(r.lhs)) {
      LineError(source, r.line, "unknown symbol '" + r.lhs +
                                    "' on the left-hand side (not a declared nonterminal)");
    }
    lhs_names.insert(r.lhs);
  }
  const std::set<std::string>& nonterminals = declared ? *declared : lhs_names;

  std::vector<std::string> symbols;
  std::vector<bool> terminal;
  std::map<std::string, SymbolId> ids;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = ids.emplace(s, static_cast<SymbolId>(symbols.size()));
    if (fresh) {
      symbols.push_back(s);
      terminal.push_back(!nonterminals.contains(s));
    }
    return it->second;
  };
  const bool probabilistic = raw.front().prob.has_value();
  std::vector<Rule> rules;
  for (const auto& r : raw) {
    if (r.prob.has_value() != probabilistic) {
      LineError(source, r.line, "either every rule has a probability or none does");
    }
    Rule rule;
    rule.lhs = intern(r.lhs);
    for (const auto& s : r.rhs) rule.rhs.push_back(intern(s));
    rule.prob = r.prob.value_or(1.0);
    rules.push_back(std::move(rule));
  }
  for (const auto& r : raw) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (&raw[i] == &r) break;
      if (raw[i].lhs == r.lhs && raw[i].rhs == r.rhs) {
        LineError(source, r.line, "duplicate rule (same as line " +
                                      std::to_string(raw[i].line) + ")");
      }
    }
  }
  const std::string start_name = start.value_or(raw.front().lhs);
  if (!ids.contains(start_name) || !nonterminals.contains(start_name)) {
    Fail(ErrorKind::kData, std::string(source) + ": start symbol '" + start_name +
                               "' has no rules");
  }
  if (probabilistic) {
    std::map<SymbolId, double> sums;
    for (const auto& r : rules) sums[r.lhs] += r.prob;
    for (const auto& [lhs, sum] : sums) {
      if (std::abs(sum - 1.0) > kProbTolerance) {
        std::size_t first_line = 0;
        for (const auto& r : raw) {
          if (r.lhs == symbols[lhs]) {
            first_line = r.line;
            break;
          }
        }
        LineError(source, first_line, "probabilities of the rules for '" + symbols[lhs] +
                                          "' sum to " + FormatDouble(sum) + ", not 1");
      }
    }
    // Sums already at 1 up to rounding keep the stated values, so text round trips are stable.
    for (auto& r : rules) {
      if (std::abs(sums[r.lhs] - 1.0) > 1e-12) r.prob /= sums[r.lhs];
    }
  }
  return FromParts(std::move(symbols), std::move(terminal), ids.at(start_name), std::move(rules),
                   probabilistic);
}

Grammar Grammar::FromParts(std::vector<std::string> symbols, std::vector<bool> terminal,
                           SymbolId start, std::vector<Rule> rules, bool probabilistic,
                           bool allow_duplicates) {
  Grammar g;
  g.symbols_ = std::move(symbols);
  g.terminal_ = std::move(terminal);
  g.start_ = start;
  g.rules_ = std::move(rules);
  g.probabilistic_ = probabilistic;
  g.Index();
  g.Validate(allow_duplicates);
  return g;
}

void Grammar::Index() {
  by_lhs_.assign(symbols_.size(), {});
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    by_lhs_.at(rules_[i].lhs).push_back(static_cast<int>(i));
  }
}

void Grammar::Validate(bool allow_duplicates) const {
  const auto n = static_cast<SymbolId>(symbols_.size());
  if (terminal_.size() != symbols_.size()) {
    Fail(ErrorKind::kContract, "grammar: symbol and terminal tables differ in size");
  }
  if (start_ < 0 || start_ >= n || terminal_[start_]) {
    Fail(ErrorKind::kData, "grammar: start symbol must be a nonterminal");
  }
  for (const auto& r : rules_) {
    if (r.lhs < 0 || r.lhs >= n) Fail(ErrorKind::kData, "grammar: rule lhs out of range");
    if (terminal_[r.lhs]) {
      Fail(ErrorKind::kData, "grammar: terminal '" + symbols_[r.lhs] + "' used as a rule lhs");
    }
    if (r.rhs.empty()) {
      Fail(ErrorKind::kUnsupported, "grammar: empty right-hand side for '" + symbols_[r.lhs] +
                                        "' (epsilon rules are not supported)");
    }
    for (SymbolId s : r.rhs) {
      if (s < 0 || s >= n) Fail(ErrorKind::kData, "grammar: rule rhs symbol out of range");
    }
  }
  for (SymbolId s = 0; s < n; ++s) {
    if (!terminal_[s] && by_lhs_[s].empty()) {
      Fail(ErrorKind::kData, "grammar: nonterminal '" + symbols_[s] + "' has no rules");
    }
  }
  if (!allow_duplicates) {
    std::set<std::pair<SymbolId, std::vector<SymbolId>>> seen;
    for (const auto& r : rules_) {
      if (!seen.emplace(r.lhs, r.rhs).second) {
        Fail(ErrorKind::kData, "grammar: duplicate rule for '" + symbols_[r.lhs] + "'");
      }
    }
  }
  if (probabilistic_) {
    for (SymbolId s = 0; s < n; ++s) {
      if (terminal_[s]) continue;
      double sum = 0;
      for (int i : by_lhs_[s]) sum += rules_[i].prob;
      if (std::abs(sum - 1.0) > kProbTolerance) {
        Fail(ErrorKind::kData, "grammar: probabilities for '" + symbols_[s] + "' sum to " +
                                   FormatDouble(sum));
      }
    }
  }
  // Unit rules A -> B must not form a cycle.
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::function<void(SymbolId)> visit = [&](SymbolId a) {
    state[a] = 1;
    for (int i : by_lhs_[a]) {
      const auto& r = rules_[i];
      if (r.rhs.size() != 1 || terminal_[r.rhs[0]]) continue;
      const SymbolId b = r.rhs[0];
      if (state[b] == 1) {
        Fail(ErrorKind::kUnsupported, "grammar: cyclic unit rules through '" + symbols_[b] +
                                          "' are not supported");
      }
      if (state[b] == 0) visit(b);
    }
    state[a] = 2;
  };
  for (SymbolId s = 0; s < n; ++s) {
    if (!terminal_[s] && state[s] == 0) visit(s);
  }
}

Grammar Grammar::Builtin(std::string_view name) {
  for (const auto& b : kBuiltins) {
    if (name == b.name) return Parse(b.text, std::string("builtin:") + b.name);
  }
  Fail(ErrorKind::kConfig, "no builtin grammar named '" + std::string(name) + "'");
}

std::vector<std::string> Grammar::BuiltinNames() {
  std::vector<std::string> out;
  for (const auto& b : kBuiltins) out.emplace_back(b.name);
  return out;
}

Grammar Grammar::Load(const std::string& name_or_path) {
  for (const auto& b : kBuiltins) {
    if (name_or_path == b.name) return Builtin(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    Fail(ErrorKind::kIo, "cannot open grammar '" + name_or_path +
                             "' (not a file and not a builtin name)");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), name_or_path);
}

std::optional<SymbolId> Grammar::Find(std::string_view name) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] == name) return static_cast<SymbolId>(i);
  }
  return std::nullopt;
}

std::vector<SymbolId> Grammar::Nonterminals() const {
  std::vector<SymbolId> out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!terminal_[i]) out.push_back(static_cast<SymbolId>(i));
  }
  return out;
}

std::vector<SymbolId> Grammar::Terminals() const {
  std::vector<SymbolId> out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (terminal_[i]) out.push_back(static_cast<SymbolId>(i));
  }
  return out;
}

Grammar Grammar::WithUniformProbabilities() const {
  std::vector<Rule> rules = rules_;
  for (auto& r : rules) r.prob = 1.0 / static_cast<double>(by_lhs_[r.lhs].size());
  return FromParts(symbols_, terminal_, start_, std::move(rules), true, true);
}

std::string Grammar::RuleText(int rule) const {
  const Rule& r = rules_.at(rule);
  std::string s = symbols_[r.lhs] + " ->";
  for (SymbolId x : r.rhs) s += " " + symbols_[x];
  if (probabilistic_) s += " [" + FormatDouble(r.prob) + "]";
  return s;
}

std::string Grammar::ToText() const {
  std::string s = "%start " + symbols_[start_] + "\n";
  for (std::size_t i = 0; i < rules_.size(); ++i) s += RuleText(static_cast<int>(i)) + "\n";
  return s;
}

std::vector<SymbolId> Grammar::Tokenize(std::string_view text) const {
  std::vector<SymbolId> out;
  for (const auto& tok : SplitWhitespace(text)) {
    const auto id = Find(tok);
    if (!id || !terminal_[*id]) {
      Fail(ErrorKind::kData, "unknown terminal '" + tok + "'");
    }
    out.push_back(*id);
  }
  return out;
}

std::string Grammar::Join(std::span<const SymbolId> tokens) const {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) s += ' ';
    s += symbols_.at(tokens[i]);
  }
  return s;
}

double TreeLogProb(const Grammar& g, const ParseTree& tree) {
  if (tree.is_leaf()) return 0;
  double lp = std::log(g.rules().at(tree.rule).prob);
  for (const auto& c : tree.children) lp += TreeLogProb(g, c);
  return lp;
}

std::string TreeToString(const Grammar& g, const ParseTree& tree) {
  if (tree.is_leaf()) return g.name(tree.symbol);
  std::string s = "(" + g.name(tree.symbol);
  for (const auto& c : tree.children) s += " " + TreeToString(g, c);
  return s + ")";
}

std::optional<std::string> CheckTree(const Grammar& g, const ParseTree& tree) {
  if (tree.is_leaf()) {
    if (!g.is_terminal(tree.symbol)) return "leaf '" + g.name(tree.symbol) + "' is not a terminal";
    return std::nullopt;
  }
  if (tree.rule < 0 || static_cast<std::size_t>(tree.rule) >= g.rules().size()) {
    return "node '" + g.name(tree.symbol) + "' has no valid rule";
  }
  const Rule& r = g.rules()[tree.rule];
  if (r.lhs != tree.symbol || r.rhs.size() != tree.children.size()) {
    return "node '" + g.name(tree.symbol) + "' does not match rule " + g.RuleText(tree.rule);
  }
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    if (tree.children[i].symbol != r.rhs[i]) {
      return "child " + std::to_string(i) + " of '" + g.name(tree.symbol) +
             "' does not match rule " + g.RuleText(tree.rule);
    }
    if (auto err = CheckTree(g, tree.children[i])) return err;
  }
  return std::nullopt;
}

namespace {

struct Expansion {
  const Grammar& g;
  Rng& rng;
  std::size_t budget;
  std::size_t used = 0;
  std::vector<double> weights;

  // False once the expansion budget is exhausted.
  bool Expand(ParseTree& node, std::vector<SymbolId>& out) {
    if (g.is_terminal(node.symbol)) {
      out.push_back(node.symbol);
      return true;
    }
    if (++used > budget) return false;
    const auto& options = g.RulesFor(node.symbol);
    weights.clear();
    for (int i : options) weights.push_back(g.rules()[i].prob);
    node.rule = options[rng.Categorical(weights)];
    const auto& rhs = g.rules()[node.rule].rhs;
    node.children.resize(rhs.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      node.children[i].symbol = rhs[i];
      if (!Expand(node.children[i], out)) return false;
    }
    return true;
  }
};

void DistancePaths(const ParseTree& t, std::vector<const ParseTree*>& stack,
                   std::vector<std::vector<const ParseTree*>>& paths) {
  stack.push_back(&t);
  if (t.is_leaf()) {
    paths.push_back(stack);
  } else {
    for (const auto& c : t.children) DistancePaths(c, stack, paths);
  }
  stack.pop_back();
}

}  // namespace

Generated Generate(const Grammar& g, Rng& rng, std::size_t max_expansions,
                   std::size_t max_restarts) {
  if (!g.probabilistic()) {
    Fail(ErrorKind::kConfig, "generate: grammar has no rule probabilities");
  }
  Generated result;
  for (;;) {
    Expansion e{g, rng, max_expansions, 0, {}};
    ParseTree root;
    root.symbol = g.start();
    std::vector<SymbolId> out;
    if (e.Expand(root, out)) {
      root.AssignSpans();
      result.tokens = std::move(out);
      result.tree = std::move(root);
      return result;
    }
    if (++result.restarts > max_restarts) {
      Fail(ErrorKind::kNumeric,
           "generate: " + std::to_string(max_restarts) + " derivations exceeded " +
               std::to_string(max_expansions) +
               " expansions; the grammar is probably too recursive (lower the probability of "
               "recursive rules)");
    }
  }
}

std::vector<std::vector<int>> TreeDistanceMatrix(const ParseTree& tree) {
  std::vector<std::vector<const ParseTree*>> paths;
  std::vector<const ParseTree*> stack;
  DistancePaths(tree, stack, paths);
  const std::size_t n = paths.size();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t common = 0;
      while (common < paths[i].size() && common < paths[j].size() &&
             paths[i][common] == paths[j][common]) {
        ++common;
      }
      const int dist = static_cast<int>(paths[i].size() + paths[j].size() - 2 * common);
      d[i][j] = d[j][i] = dist;
    }
  }
  return d;
}

}  // namespace lmlab
