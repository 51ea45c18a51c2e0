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

#include "lmlab/language_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmlab {

std::vector<double> SoftmaxValues(std::span<const Real> logits, double beta) {
  if (logits.empty()) Fail(ErrorKind::kContract, "softmax: empty input");
  if (!(beta > 0.0)) Fail(ErrorKind::kConfig, "softmax: beta must be positive");
  double mx = -std::numeric_limits<double>::infinity();
  for (Real v : logits) mx = std::max(mx, static_cast<double>(v));
  if (!std::isfinite(mx)) {
    Fail(ErrorKind::kNumeric, "softmax: no finite logit (undefined distribution)");
  }
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(beta * (static_cast<double>(logits[i]) - mx));
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> LogSoftmaxValues(std::span<const Real> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Real v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> out(logits.size(), -std::numeric_limits<double>::infinity());
  if (!std::isfinite(mx)) return out;
  double z = 0.0;
  for (Real v : logits) z += std::exp(static_cast<double>(v) - mx);
  const double lse = mx + std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> LanguageModel::SequenceLogProbs(std::span<const TokenId> ids) const {
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto logits = NextLogits(ids.first(i));
    const auto lp = LogSoftmaxValues(logits);
    out[i] = lp.at(static_cast<std::size_t>(ids[i]));
  }
  return out;
}

UniformModel::UniformModel(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size == 0) Fail(ErrorKind::kConfig, "uniform model: empty vocabulary");
}

std::vector<Real> UniformModel::NextLogits(std::span<const TokenId>) const {
  return std::vector<Real>(vocab_size_, Real{0});
}

PerplexityResult Perplexity(const LanguageModel& model, std::span<const TokenId> ids) {
  if (ids.empty()) Fail(ErrorKind::kData, "perplexity: empty sequence");
  const auto lps = model.SequenceLogProbs(ids);
  PerplexityResult r;
  r.tokens = ids.size();
  double total = 0.0;
  for (std::size_t i = 0; i < lps.size(); ++i) {
    if (!(lps[i] > -std::numeric_limits<double>::infinity()) || std::isnan(lps[i])) {
      r.zero_probability_position = i;
      r.cross_entropy = std::numeric_limits<double>::infinity();
      r.perplexity = std::numeric_limits<double>::infinity();
      return r;
    }
    total -= lps[i];
  }
  r.cross_entropy = total / static_cast<double>(ids.size());
  r.perplexity = std::exp(r.cross_entropy);
  return r;
}

}  // namespace lmlab
