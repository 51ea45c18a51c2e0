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

#ifndef LMLAB_SAMPLING_H_
#define LMLAB_SAMPLING_H_

#include <span>
#include <vector>

#include "lmlab/language_model.h"
#include "lmlab/rng.h"

namespace lmlab {

// Extends `prompt` one token at a time, drawing each from the softmax of the
// next-token logits at temperature T. Stops after `max_new` tokens or once EOS
// has been emitted (the EOS is kept). Returns prompt + continuation.
std::vector<TokenId> Sample(const LanguageModel& model, std::span<const TokenId> prompt,
                            double temperature, std::size_t max_new, Rng& rng);

// Same stopping rule, always taking the most likely token (lowest id on ties).
std::vector<TokenId> Greedy(const LanguageModel& model, std::span<const TokenId> prompt,
                            std::size_t max_new);

}  // namespace lmlab

#endif  // LMLAB_SAMPLING_H_
