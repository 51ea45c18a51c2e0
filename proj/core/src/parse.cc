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

#include "lmlab/parse.h"

#include <cmath>
#include <functional>
#include <limits>

namespace lmlab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct Binary {
  int rule;
  SymbolId a, b, c;
  double logp;
};

struct Unary {
  int rule;
  SymbolId a, t;
  double logp;
};

// Span-indexed table of per-symbol values.
class Chart {
 public:
  Chart(std::size_t n, std::size_t symbols, double fill)
      : n_(n), s_(symbols), v_((n + 1) * (n + 1) * symbols, fill) {}
  double& at(std::size_t i, std::size_t j, SymbolId a) { return v_[(i * (n_ + 1) + j) * s_ + a]; }
  double at(std::size_t i, std::size_t j, SymbolId a) const {
    return v_[(i * (n_ + 1) + j) * s_ + a];
  }

 private:
  std::size_t n_, s_;
  std::vector<double> v_;
};

struct Prepared {
  std::vector<Binary> binary;
  std::vector<Unary> unary;
};

Prepared Prepare(const Grammar& g, std::span<const SymbolId> tokens) {
  Prepared p;
  for (std::size_t r = 0; r < g.rules().size(); ++r) {
    const Rule& rule = g.rules()[r];
    const double lp = g.probabilistic() ? std::log(rule.prob) : 0.0;
    if (rule.rhs.size() == 1 && g.is_terminal(rule.rhs[0])) {
      p.unary.push_back({static_cast<int>(r), rule.lhs, rule.rhs[0], lp});
    } else if (rule.rhs.size() == 2 && !g.is_terminal(rule.rhs[0]) &&
               !g.is_terminal(rule.rhs[1])) {
      p.binary.push_back({static_cast<int>(r), rule.lhs, rule.rhs[0], rule.rhs[1], lp});
    } else {
      Fail(ErrorKind::kContract, "grammar is not in CNF: " + g.RuleText(static_cast<int>(r)));
    }
  }
  for (SymbolId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= g.symbols().size() || !g.is_terminal(t)) {
      Fail(ErrorKind::kData, "unknown terminal '" +
                                 (t >= 0 && static_cast<std::size_t>(t) < g.symbols().size()
                                      ? g.name(t)
                                      : std::to_string(t)) +
                                 "'");
    }
  }
  return p;
}

Chart Inside(const Grammar& g, const Prepared& p, std::span<const SymbolId> tokens) {
  const std::size_t n = tokens.size();
  Chart in(n, g.symbols().size(), kNegInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& u : p.unary) {
      if (u.t == tokens[i]) in.at(i, i + 1, u.a) = LogAdd(in.at(i, i + 1, u.a), u.logp);
    }
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      for (const auto& b : p.binary) {
        double acc = in.at(i, j, b.a);
        for (std::size_t k = i + 1; k < j; ++k) {
          const double l = in.at(i, k, b.b);
          if (l == kNegInf) continue;
          const double r = in.at(k, j, b.c);
          if (r == kNegInf) continue;
          acc = LogAdd(acc, b.logp + l + r);
        }
        in.at(i, j, b.a) = acc;
      }
    }
  }
  return in;
}

}  // namespace

std::optional<CykResult> CykParse(const Grammar& g, std::span<const SymbolId> tokens) {
  const Prepared p = Prepare(g, tokens);
  const std::size_t n = tokens.size();
  if (n == 0) return std::nullopt;
  const std::size_t syms = g.symbols().size();
  Chart best(n, syms, kNegInf);
  Chart back_rule(n, syms, -1);
  Chart back_split(n, syms, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& u : p.unary) {
      if (u.t == tokens[i] && u.logp > best.at(i, i + 1, u.a)) {
        best.at(i, i + 1, u.a) = u.logp;
        back_rule.at(i, i + 1, u.a) = u.rule;
      }
    }
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      for (const auto& b : p.binary) {
        for (std::size_t k = i + 1; k < j; ++k) {
          const double cand = b.logp + best.at(i, k, b.b) + best.at(k, j, b.c);
          if (cand > best.at(i, j, b.a)) {
            best.at(i, j, b.a) = cand;
            back_rule.at(i, j, b.a) = b.rule;
            back_split.at(i, j, b.a) = static_cast<double>(k);
          }
        }
      }
    }
  }
  if (best.at(0, n, g.start()) == kNegInf) return std::nullopt;

  std::function<ParseTree(std::size_t, std::size_t, SymbolId)> build =
      [&](std::size_t i, std::size_t j, SymbolId a) {
        ParseTree t;
        t.symbol = a;
        t.rule = static_cast<int>(back_rule.at(i, j, a));
        t.begin = i;
        t.end = j;
        const Rule& r = g.rules()[t.rule];
        if (j == i + 1) {
          ParseTree leaf;
          leaf.symbol = tokens[i];
          leaf.begin = i;
          leaf.end = j;
          t.children.push_back(std::move(leaf));
        } else {
          const auto k = static_cast<std::size_t>(back_split.at(i, j, a));
          t.children.push_back(build(i, k, r.rhs[0]));
          t.children.push_back(build(k, j, r.rhs[1]));
        }
        return t;
      };
  CykResult result;
  result.tree = build(0, n, g.start());
  result.log_prob = best.at(0, n, g.start());
  return result;
}

std::optional<ParseTree> ParseBest(const CnfGrammar& cnf, std::span<const SymbolId> tokens) {
  const auto mapped = cnf.MapTokens(tokens);
  auto result = CykParse(cnf.grammar, mapped);
  if (!result) return std::nullopt;
  return cnf.Restore(result->tree);
}

double InsideLogProb(const Grammar& g, std::span<const SymbolId> tokens) {
  if (!g.probabilistic()) Fail(ErrorKind::kConfig, "inside: grammar has no rule probabilities");
  const Prepared p = Prepare(g, tokens);
  if (tokens.empty()) return kNegInf;
  return Inside(g, p, tokens).at(0, tokens.size(), g.start());
}

std::vector<double> RulePosteriors(const Grammar& g, std::span<const SymbolId> tokens) {
  if (!g.probabilistic()) Fail(ErrorKind::kConfig, "outside: grammar has no rule probabilities");
  const Prepared p = Prepare(g, tokens);
  std::vector<double> counts(g.rules().size(), 0.0);
  const std::size_t n = tokens.size();
  if (n == 0) return counts;
  const Chart in = Inside(g, p, tokens);
  const double z = in.at(0, n, g.start());
  if (z == kNegInf) return counts;
  Chart out(n, g.symbols().size(), kNegInf);
  out.at(0, n, g.start()) = 0;
  for (std::size_t len = n; len >= 2; --len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      for (const auto& b : p.binary) {
        const double o = out.at(i, j, b.a);
        if (o == kNegInf) continue;
        for (std::size_t k = i + 1; k < j; ++k) {
          const double l = in.at(i, k, b.b);
          const double r = in.at(k, j, b.c);
          if (l == kNegInf || r == kNegInf) continue;
          out.at(i, k, b.b) = LogAdd(out.at(i, k, b.b), o + b.logp + r);
          out.at(k, j, b.c) = LogAdd(out.at(k, j, b.c), o + b.logp + l);
          counts[b.rule] += std::exp(o + b.logp + l + r - z);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& u : p.unary) {
      if (u.t != tokens[i]) continue;
      const double o = out.at(i, i + 1, u.a);
      if (o != kNegInf) counts[u.rule] += std::exp(o + u.logp - z);
    }
  }
  return counts;
}

EntropyEstimate GrammarEntropyFloor(const Grammar& g, std::size_t samples, Rng& rng,
                                    bool count_separator) {
  if (samples < 2) Fail(ErrorKind::kConfig, "entropy floor needs at least 2 samples");
  const CnfGrammar cnf = ToCnf(g);
  std::vector<double> x(samples), y(samples);
  EntropyEstimate est;
  est.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    const Generated gen = Generate(g, rng);
    est.restarts += gen.restarts;
    if (gen.tokens.size() > kMaxEntropyStringTokens) {
      Fail(ErrorKind::kUnsupported,
           "entropy floor: sampled a string of " + std::to_string(gen.tokens.size()) +
               " tokens (limit " + std::to_string(kMaxEntropyStringTokens) +
               "); the grammar's expected string length may be infinite");
    }
    x[s] = -InsideLogProb(cnf.grammar, cnf.MapTokens(gen.tokens));
    y[s] = static_cast<double>(gen.tokens.size() + (count_separator ? 1 : 0));
  }
  double sx = 0, sy = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    sx += x[s];
    sy += y[s];
  }
  const double ratio = sx / sy;
  const double mean_y = sy / static_cast<double>(samples);
  double ss = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double d = x[s] - ratio * y[s];
    ss += d * d;
  }
  const double var = ss / static_cast<double>(samples - 1);
  est.nats_per_token = ratio;
  est.standard_error = std::sqrt(var / static_cast<double>(samples)) / mean_y;
  est.mean_length = mean_y;
  return est;
}

}  // namespace lmlab
