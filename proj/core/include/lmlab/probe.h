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

#ifndef LMLAB_PROBE_H_
#define LMLAB_PROBE_H_

#include <span>
#include <vector>

#include "lmlab/rng.h"
#include "lmlab/tensor.h"

namespace lmlab {

struct ProbeSentence {
  Tensor vectors;                           // [n x p], one row per word
  std::vector<std::vector<int>> distances;  // n x n tree distances
};

struct ProbeConfig {
  std::size_t rank = 16;
  std::size_t steps = 500;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
};

struct StructuralProbe {
  Tensor projection;  // [r x p]
  std::size_t layer = 0;
  std::vector<double> loss_curve;  // one entry per step
  double loss = 0;                 // best loss seen, the one `projection` achieves

  // ||P (u_i - u_j)||^2
  double PredictSquared(const Tensor& vectors, std::size_t i, std::size_t j) const;
};

// Minimises mean over word pairs of | ||P(u_i - u_j)||^2 - d_tree(i, j) | by
// full-batch gradient descent (Adam). Rank 0 is the constant zero predictor.
StructuralProbe TrainStructuralProbe(std::span<const ProbeSentence> sentences,
                                     const ProbeConfig& config);

double ProbeLoss(const StructuralProbe& probe, std::span<const ProbeSentence> sentences);

struct ProbeScore {
  double spearman = 0;  // mean over scored sentences
  double rmse = 0;      // over all pairs, predicted squared distance vs tree distance
  std::size_t sentences = 0;
  std::size_t skipped = 0;  // fewer than two words, or a constant ranking
};

ProbeScore EvaluateProbe(const StructuralProbe& probe, std::span<const ProbeSentence> sentences);

// Negative control: relabels the words of each sentence by a random
// permutation, so the distances are still those of a tree but no longer the
// sentence's own.
std::vector<ProbeSentence> ShuffleTrees(std::span<const ProbeSentence> sentences, Rng& rng);

// Ranks starting at 1 with ties given their mean rank.
std::vector<double> MidRanks(std::span<const double> x);
// Pearson correlation of mid-ranks; NaN when either input is constant.
double Spearman(std::span<const double> x, std::span<const double> y);

}  // namespace lmlab

#endif  // LMLAB_PROBE_H_
