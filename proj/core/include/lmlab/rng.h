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

#ifndef LMLAB_RNG_H_
#define LMLAB_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "lmlab/error.h"

namespace lmlab {

// Derives an independent 64-bit seed from a parent seed and a stage label.
// Adding new labeled stages never perturbs the streams of existing ones.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label);

// Single seeded generator. Every stochastic operation takes one explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform();
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);
  double Normal(double mean = 0.0, double stddev = 1.0);
  // Draws an index with probability proportional to weights[i] (>= 0).
  std::size_t Categorical(std::span<const double> weights);

  Rng Split(std::string_view label) { return Rng(DeriveSeed(NextU64(), label)); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lmlab

#endif  // LMLAB_RNG_H_
