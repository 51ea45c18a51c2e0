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

#include "lmlab/ngram.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmlab {

NGramModel NGramModel::Fit(std::span<const TokenId> ids, std::size_t order, double k,
                           std::size_t vocab_size) {
  if (order < 1) Fail(ErrorKind::kConfig, "fit_ngram: order must be >= 1");
  if (!(k >= 0.0) || !std::isfinite(k)) {
    Fail(ErrorKind::kConfig, "fit_ngram: smoothing constant k must be finite and >= 0");
  }
  if (ids.size() < order) {
    Fail(ErrorKind::kData, "fit_ngram: sequence of length " + std::to_string(ids.size()) +
                               " is shorter than order " + std::to_string(order));
  }
  if (vocab_size == 0) Fail(ErrorKind::kConfig, "fit_ngram: empty vocabulary");
  NGramModel m(order, k, vocab_size);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab_size) {
      Fail(ErrorKind::kData, "fit_ngram: id " + std::to_string(ids[i]) + " at position " +
                                 std::to_string(i) + " outside vocabulary");
    }
    ContextCounts& cc = m.counts_[m.MakeContext(ids.first(i))];
    ++cc.next[ids[i]];
    ++cc.total;
  }
  return m;
}

NGramModel::Context NGramModel::MakeContext(std::span<const TokenId> prefix) const {
  const std::size_t n = order_ - 1;
  Context ctx(n, Vocab::kBos);
  const std::size_t take = std::min(n, prefix.size());
  for (std::size_t i = 0; i < take; ++i) {
    ctx[n - take + i] = prefix[prefix.size() - take + i];
  }
  return ctx;
}

std::uint64_t NGramModel::Count(std::span<const TokenId> context, TokenId w) const {
  auto it = counts_.find(MakeContext(context));
  if (it == counts_.end()) return 0;
  auto jt = it->second.next.find(w);
  return jt == it->second.next.end() ? 0 : jt->second;
}

std::uint64_t NGramModel::ContextTotal(std::span<const TokenId> context) const {
  auto it = counts_.find(MakeContext(context));
  return it == counts_.end() ? 0 : it->second.total;
}

std::optional<double> NGramModel::CondProb(std::span<const TokenId> context, TokenId w) const {
  const double total = static_cast<double>(ContextTotal(context));
  const double denom = total + k_ * static_cast<double>(vocab_size_);
  if (denom == 0.0) return std::nullopt;
  return (static_cast<double>(Count(context, w)) + k_) / denom;
}

std::vector<Real> NGramModel::NextLogits(std::span<const TokenId> prefix) const {
  std::vector<Real> out(vocab_size_, -std::numeric_limits<Real>::infinity());
  auto it = counts_.find(MakeContext(prefix));
  const double total = it == counts_.end() ? 0.0 : static_cast<double>(it->second.total);
  const double denom = total + k_ * static_cast<double>(vocab_size_);
  if (denom == 0.0) return out;
  for (std::size_t w = 0; w < vocab_size_; ++w) {
    double c = 0.0;
    if (it != counts_.end()) {
      auto jt = it->second.next.find(static_cast<TokenId>(w));
      if (jt != it->second.next.end()) c = static_cast<double>(jt->second);
    }
    const double p = (c + k_) / denom;
    if (p > 0.0) out[w] = static_cast<Real>(std::log(p));
  }
  return out;
}

std::vector<double> NGramModel::SequenceLogProbs(std::span<const TokenId> ids) const {
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto p = CondProb(ids.first(i), ids[i]);
    out[i] = (p && *p > 0.0) ? std::log(*p) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

std::string NGramModel::Dump(const Vocab* vocab) const {
  auto name = [vocab](TokenId id) {
    return vocab != nullptr ? EscapeToken(vocab->Token(id)) : std::to_string(id);
  };
  std::ostringstream os;
  for (const auto& [ctx, cc] : counts_) {
    std::string c;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) c.push_back(' ');
      c += name(ctx[i]);
    }
    for (const auto& [w, n] : cc.next) os << c << '\t' << name(w) << '\t' << n << '\n';
  }
  return os.str();
}

}  // namespace lmlab
