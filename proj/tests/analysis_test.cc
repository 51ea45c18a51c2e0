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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "lmlab/analysis.h"
#include "lmlab/grammar.h"
#include "lmlab/probe.h"
#include "lmlab/scaling.h"
#include "lmlab/tasks.h"
#include "lmlab/transformer.h"
#include "test_util.h"

namespace lmlab {
namespace {

TransformerModel SmallTransformer(std::uint64_t seed, std::size_t vocab = 7) {
  TransformerConfig c;
  c.vocab_size = vocab;
  c.dim = 12;
  c.pos_dim = 4;
  c.window = 10;
  c.layers = 3;
  c.heads = 3;
  c.hidden = 8;
  c.layer_norm = true;
  TransformerModel m(c);
  Rng rng(seed);
  testing::RandomizeParams(m, rng);
  return m;
}

TEST(Capture, InputLayerIsEmbeddingPlusPosition) {
  auto m = SmallTransformer(1);
  const std::vector<TokenId> ids{2, 5, 5, 0, 6};
  auto trace = CaptureActivations(m, ids, std::vector<std::size_t>{0});
  ASSERT_EQ(trace.layers.size(), 1u);
  EXPECT_EQ(trace.labels[0], "input");
  const Tensor pe = PositionalEncoding(ids.size(), 4);
  const Tensor& embed = m.param("embed");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(trace.layers[0].at(i, k), embed.at(ids[i], k));
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(trace.layers[0].at(i, 8 + k), pe.at(i, k));
  }
}

TEST(Capture, AttentionRowsAreCausalDistributions) {
  auto m = SmallTransformer(2);
  const std::vector<TokenId> ids{1, 2, 3, 4, 5, 6, 0, 1};
  auto trace = CaptureActivations(m, ids, {}, true);
  EXPECT_EQ(trace.layers.size(), 4u);
  ASSERT_EQ(trace.attention.size(), 3u);
  EXPECT_TRUE(trace.attention[1].weights.empty());
  for (std::size_t l : {0u, 2u}) {
    ASSERT_EQ(trace.attention[l].weights.size(), 1u);
    ASSERT_EQ(trace.attention[l].weights[0].size(), 3u);
    for (const Tensor& w : trace.attention[l].weights[0]) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          if (j > i) EXPECT_EQ(w.at(i, j), 0);
          sum += w.at(i, j);
        }
        EXPECT_NEAR(sum, 1, 1e-9);
      }
    }
  }
}

TEST(Capture, IsPure) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = SmallTransformer(100 + trial);
    std::vector<TokenId> ids(1 + rng.Index(10));
    for (auto& t : ids) t = static_cast<TokenId>(rng.Index(7));
    const Tensor before = m.ForwardValues(ids);
    CaptureActivations(m, ids, {}, true);
    ForwardCapture cap;
    const Tensor with = m.ForwardValues(ids, &cap);
    const Tensor after = m.ForwardValues(ids);
    EXPECT_TRUE(std::ranges::equal(before.data(), with.data()));
    EXPECT_TRUE(std::ranges::equal(before.data(), after.data()));
  }
}

TEST(Capture, LayerOutOfRange) {
  auto m = SmallTransformer(4);
  const std::vector<TokenId> ids{1, 2};
  try {
    CaptureActivations(m, ids, std::vector<std::size_t>{4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("layer index 4"), std::string::npos);
  }
}

InductionDataset SmallInduction(std::uint64_t seed) {
  Rng rng(seed);
  InductionConfig c;
  c.content_tokens = 16;
  c.length = 16;
  c.train_examples = 1000;
  c.test_examples = 1000;
  return MakeInduction(c, rng);
}

TEST(Induction, CopyMatchWeightsAreExact) {
  const auto data = SmallInduction(5);
  auto m = CopyMatchTransformer(data.vocab.size(), 32);
  for (const auto* set : {&data.train, &data.test}) {
    const auto r = InductionScore(m, *set);
    EXPECT_EQ(r.accuracy, 1.0);
    ASSERT_TRUE(r.attention_mass.has_value());
    EXPECT_GT(*r.attention_mass, 0.99);
    EXPECT_EQ(r.examples, set->size());
  }
  EXPECT_THROW(CopyMatchTransformer(0, 32), Error);
}

TEST(Induction, CopyMatchScalesWithVocabulary) {
  InductionConfig c;
  c.content_tokens = 61;
  c.length = 24;
  c.train_examples = 16;
  c.test_examples = 200;
  Rng rng(6);
  const auto data = MakeInduction(c, rng);
  auto m = CopyMatchTransformer(data.vocab.size(), c.length + 1);
  EXPECT_EQ(m.config().dim, 4u * 64u);
  EXPECT_EQ(InductionScore(m, data.test).accuracy, 1.0);
}

// An untrained model's argmax does not depend on which earlier token
// followed A, so over uniform B it is right about 1/16 of the time.
TEST(Induction, UntrainedIsAtChance) {
  const auto data = SmallInduction(6);
  const double chance = 1.0 / 16;
  std::size_t correct = 0, total = 0;
  for (int seed = 0; seed < 4; ++seed) {
    TransformerConfig c;
    c.vocab_size = data.vocab.size();
    c.dim = 32;
    c.window = 20;
    c.layers = 4;
    c.heads = 4;
    c.hidden = 64;
    TransformerModel m(c);
    Rng rng(seed);
    m.InitParams(rng);
    const auto r = InductionScore(m, data.test);
    correct += static_cast<std::size_t>(std::lround(r.accuracy * static_cast<double>(r.examples)));
    total += r.examples;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  const double sigma = std::sqrt(chance * (1 - chance) / static_cast<double>(total));
  EXPECT_LT(std::abs(acc - chance), 3 * sigma) << "accuracy " << acc;
}

TEST(Induction, NoAttentionMassForRnn) {
  const auto data = SmallInduction(7);
  auto m = MakeModel(ModelKind::kRnn, "vocab_size=" + std::to_string(data.vocab.size()) + "\n");
  Rng rng(1);
  m->InitParams(rng);
  const std::vector<TaskExample> few(data.test.begin(), data.test.begin() + 10);
  EXPECT_FALSE(InductionScore(*m, few).attention_mass.has_value());
}

// Cumulative one-hot vectors: u^i = e_0 + ... + e_{i-1}, so
// ||u^i - u^j||^2 = |i - j|, the path-graph distance.
ProbeSentence PathSentence(std::size_t n, std::size_t p) {
  ProbeSentence s;
  s.vectors = Tensor({n, p});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) s.vectors.at(i, k) = 1;
  }
  s.distances.assign(n, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s.distances[i][j] = static_cast<int>(i > j ? i - j : j - i);
  }
  return s;
}

TEST(Probe, PlantedPathGraph) {
  std::vector<ProbeSentence> train, test;
  for (std::size_t n = 3; n <= 12; ++n) train.push_back(PathSentence(n, 12));
  for (std::size_t n = 3; n <= 12; n += 2) test.push_back(PathSentence(n, 12));
  ProbeConfig c;
  c.rank = 12;
  c.steps = 1500;
  c.learning_rate = 0.01;
  auto probe = TrainStructuralProbe(train, c);
  EXPECT_LT(probe.loss, 0.02);
  EXPECT_EQ(probe.loss_curve.size(), c.steps);
  EXPECT_NEAR(ProbeLoss(probe, train), probe.loss, 1e-9);
  const auto score = EvaluateProbe(probe, test);
  EXPECT_GE(score.spearman, 0.95);
  EXPECT_EQ(score.sentences, test.size());
  EXPECT_LT(score.rmse, 0.1);
  // Identity projection is exact.
  StructuralProbe exact;
  exact.projection = Tensor({12, 12});
  for (std::size_t i = 0; i < 12; ++i) exact.projection.at(i, i) = 1;
  EXPECT_EQ(ProbeLoss(exact, train), 0);
  EXPECT_DOUBLE_EQ(EvaluateProbe(exact, test).spearman, 1.0);
}

TEST(Probe, RankZeroIsMeanDistance) {
  std::vector<ProbeSentence> train{PathSentence(5, 6), PathSentence(3, 6)};
  ProbeConfig c;
  c.rank = 0;
  auto probe = TrainStructuralProbe(train, c);
  // Pairs: n=5 has distances summing to 20 over 10 pairs, n=3 sums to 4 over 3.
  EXPECT_NEAR(probe.loss, 24.0 / 13.0, 1e-12);
  EXPECT_EQ(EvaluateProbe(probe, train).sentences, 0u);  // constant predictions
}

TEST(Probe, Errors) {
  EXPECT_THROW(TrainStructuralProbe({}, ProbeConfig{}), Error);
  ProbeSentence bad = PathSentence(4, 5);
  bad.distances.pop_back();
  std::vector<ProbeSentence> v{bad};
  EXPECT_THROW(TrainStructuralProbe(v, ProbeConfig{}), Error);
  std::vector<ProbeSentence> tiny{PathSentence(1, 5), PathSentence(4, 5)};
  StructuralProbe id;
  id.projection = Tensor({5, 5});
  for (std::size_t i = 0; i < 5; ++i) id.projection.at(i, i) = 1;
  const auto s = EvaluateProbe(id, tiny);
  EXPECT_EQ(s.skipped, 1u);
  EXPECT_EQ(s.sentences, 1u);
}

TEST(Probe, RandomProjectionIsNull) {
  Grammar g = Grammar::Builtin("fig3_pcfg");
  Rng rng(8);
  std::vector<ProbeSentence> sentences;
  while (sentences.size() < 200) {
    auto gen = Generate(g, rng);
    if (gen.tokens.size() < 4) continue;
    ProbeSentence s;
    s.vectors = testing::RandomTensor(rng, {gen.tokens.size(), 16}, 1.0);
    s.distances = TreeDistanceMatrix(gen.tree);
    sentences.push_back(std::move(s));
  }
  StructuralProbe probe;
  probe.projection = testing::RandomTensor(rng, {4, 16}, 1.0);
  const auto score = EvaluateProbe(probe, sentences);
  EXPECT_LT(std::abs(score.spearman), 0.2);
}

TEST(Probe, ShuffledTreesKeepDistanceMultiset) {
  Rng rng(12);
  std::vector<ProbeSentence> v{PathSentence(6, 6)};
  const auto shuffled = ShuffleTrees(v, rng);
  std::multiset<int> a, b;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      a.insert(v[0].distances[i][j]);
      b.insert(shuffled[0].distances[i][j]);
      EXPECT_EQ(shuffled[0].distances[i][j], shuffled[0].distances[j][i]);
    }
  }
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::ranges::equal(v[0].vectors.data(), shuffled[0].vectors.data()));
}

TEST(Probe, SentenceFromModelActivations) {
  Grammar g = Grammar::Builtin("fig3_pcfg");
  Rng rng(13);
  auto corpus = MakeGrammarCorpus(g, 50, rng);
  TransformerConfig c;
  c.vocab_size = corpus.vocab.size();
  c.dim = 16;
  c.window = 64;
  c.layers = 2;
  c.heads = 2;
  c.hidden = 8;
  TransformerModel m(c);
  m.InitParams(rng);
  const auto& ids = corpus.strings[0];
  auto s = ProbeSentenceFor(m, 1, ids, corpus.trees[0]);
  EXPECT_EQ(s.vectors.rows(), ids.size());
  EXPECT_EQ(s.vectors.cols(), 16u);
  std::vector<TokenId> input{Vocab::kBos};
  input.insert(input.end(), ids.begin(), ids.end());
  ForwardCapture cap;
  m.ForwardValues(input, &cap);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(s.vectors.row(i), cap.activations[1].row(i + 1)));
  }
  EXPECT_EQ(s.distances, TreeDistanceMatrix(corpus.trees[0]));
}

TEST(Spearman, MidRanks) {
  const std::vector<double> x{3, 1, 3, 2, 3};
  EXPECT_EQ(MidRanks(x), (std::vector<double>{4, 1, 4, 2, 4}));
  const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 40}, c{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(Spearman(a, b), 1.0);
  EXPECT_DOUBLE_EQ(Spearman(a, c), -1.0);
  const std::vector<double> flat{2, 2, 2, 2};
  EXPECT_TRUE(std::isnan(Spearman(a, flat)));
  const std::vector<double> one{1};
  EXPECT_TRUE(std::isnan(Spearman(one, one)));
  EXPECT_THROW(Spearman(a, one), Error);
}

TEST(Spearman, MonotoneInvariance) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.Index(30);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.Index(6));  // ties
      y[i] = rng.Normal(0, 1);
    }
    std::vector<double> fx(n), fy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = std::exp(x[i]) + 3;
      fy[i] = y[i] * y[i] * y[i] - 7;
    }
    const double r = Spearman(x, y), rf = Spearman(fx, fy);
    if (std::isnan(r)) {
      EXPECT_TRUE(std::isnan(rf));
    } else {
      EXPECT_EQ(r, rf);
    }
  }
}

constexpr double kAlphaP = 0.076, kAlphaD = 0.095, kPc = 8.8e13, kDc = 5.4e13;

std::vector<ScalingPoint> PlantedGrid(Rng* rng, double noise) {
  std::vector<ScalingPoint> pts;
  const ScalingFit truth{kAlphaP, kAlphaD, kPc, kDc};
  for (double p = 1e5; p <= 1e9 * 1.01; p *= 10) {
    for (double d = 1e7; d <= 1e10 * 1.01; d *= std::sqrt(10.0)) {
      double loss = ScalingLaw(truth, p, d);
      if (rng != nullptr) loss *= 1 + noise * rng->Normal(0, 1);
      pts.push_back({p, d, loss});
    }
  }
  return pts;
}

TEST(Scaling, LawFormula) {
  const ScalingFit f{0.5, 1.0, 4.0, 2.0};
  // [ (4/1)^(0.5) + 2/1 ]^1 = 4
  EXPECT_NEAR(ScalingLaw(f, 1, 1), 4, 1e-12);
  EXPECT_NEAR(ScalingLaw(f, 1, std::numeric_limits<double>::infinity()), 2, 1e-12);
}

TEST(Scaling, NoiselessRecovery) {
  const auto pts = PlantedGrid(nullptr, 0);
  const auto fit = FitScaling(pts);
  EXPECT_NEAR(fit.alpha_p, kAlphaP, 0.01 * kAlphaP);
  EXPECT_NEAR(fit.alpha_d, kAlphaD, 0.01 * kAlphaD);
  EXPECT_LT(fit.residual, 1e-8);
  EXPECT_FALSE(fit.pure_power_law);
}

TEST(Scaling, NoisyRecoveryMedian) {
  std::vector<double> ep, ed;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(DeriveSeed(10, "scaling/" + std::to_string(seed)));
    const auto fit = FitScaling(PlantedGrid(&rng, 0.05));
    ep.push_back(std::abs(fit.alpha_p - kAlphaP) / kAlphaP);
    ed.push_back(std::abs(fit.alpha_d - kAlphaD) / kAlphaD);
  }
  std::nth_element(ep.begin(), ep.begin() + 10, ep.end());
  std::nth_element(ed.begin(), ed.begin() + 10, ed.end());
  EXPECT_LT(ep[10], 0.10);
  EXPECT_LT(ed[10], 0.10);
}

TEST(Scaling, PurePowerLawMatchesLogLogSlope) {
  Rng rng(11);
  std::vector<ScalingPoint> pts;
  const double inf = std::numeric_limits<double>::infinity();
  for (double p = 1e4; p < 1e9; p *= 3) {
    pts.push_back({p, inf, std::pow(1e12 / p, 0.07) * (1 + 0.02 * rng.Normal(0, 1))});
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pts.size());
  for (const auto& pt : pts) {
    const double x = std::log(pt.params), y = std::log(pt.loss);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const auto fit = FitScaling(pts);
  EXPECT_TRUE(fit.pure_power_law);
  EXPECT_NEAR(fit.alpha_p, -slope, 1e-6);
}

TEST(Scaling, NeedsADecade) {
  auto pts = PlantedGrid(nullptr, 0);
  for (auto& pt : pts) pt.params = 1e5 + pt.params * 1e-9;
  try {
    FitScaling(pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("decade"), std::string::npos) << e.what();
  }
  const auto grid = PlantedGrid(nullptr, 0);
  std::vector<ScalingPoint> few(grid.begin(), grid.begin() + 5);
  EXPECT_THROW(FitScaling(few), Error);
}

TEST(Scaling, CsvRoundTrip) {
  std::vector<ScalingPoint> pts{{1e5, 1e7, 3.25},
                                {2e6, std::numeric_limits<double>::infinity(), 2.5}};
  std::stringstream s;
  WriteScalingCsv(s, pts);
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "params,tokens,loss");
  const auto back = ReadScalingCsv(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].params, 1e5);
  EXPECT_EQ(back[0].loss, 3.25);
  EXPECT_TRUE(std::isinf(back[1].tokens));
  std::stringstream bad("params,tokens,loss\n1,2\n");
  EXPECT_THROW(ReadScalingCsv(bad), Error);
}

}  // namespace
}  // namespace lmlab
