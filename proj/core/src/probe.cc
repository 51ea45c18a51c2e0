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

#include "lmlab/probe.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lmlab/model.h"
#include "lmlab/train.h"

namespace lmlab {
namespace {

struct PairData {
  Tensor diffs;  // [pairs x p]
  Tensor target;  // [pairs]
};

PairData CollectPairs(std::span<const ProbeSentence> sentences) {
  if (sentences.empty()) Fail(ErrorKind::kData, "probe: empty dataset");
  const std::size_t p = sentences[0].vectors.cols();
  std::vector<Real> diffs;
  std::vector<Real> target;
  for (const auto& s : sentences) {
    const std::size_t n = s.vectors.rows();
    if (s.vectors.cols() != p || s.distances.size() != n) {
      Fail(ErrorKind::kDimension, "probe: sentence vectors " + s.vectors.ShapeString() +
                                      " do not match a " + std::to_string(s.distances.size()) +
                                      "-word distance matrix of width " + std::to_string(p));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto a = s.vectors.row(i);
        const auto b = s.vectors.row(j);
        for (std::size_t k = 0; k < p; ++k) diffs.push_back(a[k] - b[k]);
        target.push_back(static_cast<Real>(s.distances[i][j]));
      }
    }
  }
  const std::size_t pairs = target.size();
  return {Tensor({pairs, p}, std::move(diffs)), Tensor::Vector(std::move(target))};
}

double MeanAbs(const Tensor& t) {
  if (t.size() == 0) return 0;
  double s = 0;
  for (Real x : t.data()) s += std::abs(static_cast<double>(x));
  return s / static_cast<double>(t.size());
}

}  // namespace

double StructuralProbe::PredictSquared(const Tensor& vectors, std::size_t i,
                                       std::size_t j) const {
  const auto a = vectors.row(i);
  const auto b = vectors.row(j);
  double total = 0;
  for (std::size_t r = 0; r < projection.rows(); ++r) {
    const auto w = projection.row(r);
    double z = 0;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * (a[k] - b[k]);
    total += z * z;
  }
  return total;
}

StructuralProbe TrainStructuralProbe(std::span<const ProbeSentence> sentences,
                                     const ProbeConfig& config) {
  const PairData data = CollectPairs(sentences);
  const std::size_t p = data.diffs.cols();
  StructuralProbe probe;
  probe.projection = Tensor({config.rank, p});
  if (config.rank == 0 || data.target.size() == 0) {
    probe.loss = MeanAbs(data.target);
    probe.loss_curve.assign(config.steps, probe.loss);
    return probe;
  }
  Rng rng(DeriveSeed(config.seed, "probe"));
  const double stddev = 1.0 / std::sqrt(static_cast<double>(p));
  for (auto& x : probe.projection.data()) x = static_cast<Real>(rng.Normal(0.0, stddev));

  TrainConfig opt_config;
  opt_config.optimizer = "adam";
  opt_config.learning_rate = config.learning_rate;
  opt_config.clip_norm = 0;
  ParamList params{{"projection", probe.projection}};
  Optimizer opt(opt_config, params, config.steps);
  probe.loss = std::numeric_limits<double>::infinity();
  for (std::size_t step = 0; step < config.steps; ++step) {
    Tape tape;
    const Var proj = tape.Leaf(params[0].value);
    const Var diffs = tape.Constant(data.diffs);
    const Var target = tape.Constant(data.target);
    const Var sq = RowSumSquares(MatMulNT(diffs, proj));
    const Var loss = Mean(Abs(Sub(sq, target)));
    const double value = loss.value().data()[0];
    probe.loss_curve.push_back(value);
    if (value < probe.loss) {
      probe.loss = value;
      probe.projection = params[0].value;
    }
    tape.Backward(loss);
    std::vector<Tensor> grads{tape.grad(proj)};
    opt.Step(params, grads, step);
  }
  const double last = ProbeLoss(StructuralProbe{params[0].value, 0, {}, 0}, sentences);
  if (last < probe.loss) {
    probe.loss = last;
    probe.projection = params[0].value;
  }
  return probe;
}

double ProbeLoss(const StructuralProbe& probe, std::span<const ProbeSentence> sentences) {
  const PairData data = CollectPairs(sentences);
  if (data.target.size() == 0) return 0;
  if (probe.projection.rows() == 0) return MeanAbs(data.target);
  Tensor z = MatMul(data.diffs, Transpose(probe.projection));
  double total = 0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double sq = 0;
    for (Real x : z.row(r)) sq += static_cast<double>(x) * x;
    total += std::abs(sq - data.target.data()[r]);
  }
  return total / static_cast<double>(z.rows());
}

ProbeScore EvaluateProbe(const StructuralProbe& probe, std::span<const ProbeSentence> sentences) {
  ProbeScore score;
  double rho_sum = 0;
  double sq_err = 0;
  std::size_t pairs = 0;
  for (const auto& s : sentences) {
    const std::size_t n = s.vectors.rows();
    if (n < 2) {
      ++score.skipped;
      continue;
    }
    std::vector<double> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = probe.projection.rows() == 0 ? 0.0 : probe.PredictSquared(s.vectors, i, j);
        pred.push_back(d);
        gold.push_back(s.distances[i][j]);
        sq_err += (d - gold.back()) * (d - gold.back());
        ++pairs;
      }
    }
    const double rho = Spearman(pred, gold);
    if (std::isnan(rho)) {
      ++score.skipped;
      continue;
    }
    rho_sum += rho;
    ++score.sentences;
  }
  score.spearman = score.sentences > 0 ? rho_sum / static_cast<double>(score.sentences) : 0;
  score.rmse = pairs > 0 ? std::sqrt(sq_err / static_cast<double>(pairs)) : 0;
  return score;
}

std::vector<ProbeSentence> ShuffleTrees(std::span<const ProbeSentence> sentences, Rng& rng) {
  std::vector<ProbeSentence> out(sentences.begin(), sentences.end());
  for (auto& s : out) {
    const std::size_t n = s.distances.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.Index(i)]);
    auto d = s.distances;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = s.distances[perm[i]][perm[j]];
    }
    s.distances = std::move(d);
  }
  return out;
}

std::vector<double> MidRanks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    Fail(ErrorKind::kDimension, "spearman: inputs differ in length");
  }
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = MidRanks(x);
  const auto ry = MidRanks(y);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lmlab
