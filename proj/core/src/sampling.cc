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

#include "lmlab/sampling.h"

#include <algorithm>
#include <string>

#include "lmlab/text.h"

namespace lmlab {

std::vector<TokenId> Sample(const LanguageModel& model, std::span<const TokenId> prompt,
                            double temperature, std::size_t max_new, Rng& rng) {
  if (!(temperature > 0)) {
    Fail(ErrorKind::kConfig, "sample: temperature must be > 0, got " + std::to_string(temperature));
  }
  std::vector<TokenId> out(prompt.begin(), prompt.end());
  for (std::size_t step = 0; step < max_new; ++step) {
    const auto logits = model.NextLogits(out);
    const auto probs = SoftmaxValues(logits, 1.0 / temperature);
    const auto next = static_cast<TokenId>(rng.Categorical(probs));
    out.push_back(next);
    if (next == Vocab::kEos) break;
  }
  return out;
}

std::vector<TokenId> Greedy(const LanguageModel& model, std::span<const TokenId> prompt,
                            std::size_t max_new) {
  std::vector<TokenId> out(prompt.begin(), prompt.end());
  for (std::size_t step = 0; step < max_new; ++step) {
    const auto logits = model.NextLogits(out);
    const auto next =
        static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    out.push_back(next);
    if (next == Vocab::kEos) break;
  }
  return out;
}

}  // namespace lmlab
