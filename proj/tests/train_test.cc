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

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lmlab/config_text.h"
#include "lmlab/ffn_lm.h"
#include "lmlab/tasks.h"
#include "lmlab/train.h"
#include "lmlab/transformer.h"
#include "test_util.h"

namespace lmlab {
namespace {

TransformerConfig TinyTransformer(std::size_t vocab, std::size_t window) {
  TransformerConfig c;
  c.vocab_size = vocab;
  c.dim = 32;
  c.pos_dim = 8;
  c.heads = 2;
  c.layers = 2;
  c.hidden = 64;
  c.window = window;
  return c;
}

TEST(Init, VarianceIsOneOverFanIn) {
  FfnLmConfig c;
  c.vocab_size = 10;
  c.dim = 512;
  c.context = 1;
  c.hidden = 512;
  FfnLmModel model(c);
  InitModel(model, 3);
  const auto w = model.param("w0").data();
  ASSERT_EQ(w.size(), 512u * 512u);
  double mean = 0, sq = 0;
  for (Real x : w) mean += x;
  mean /= static_cast<double>(w.size());
  for (Real x : w) sq += (x - mean) * (x - mean);
  const double var = sq / static_cast<double>(w.size() - 1);
  EXPECT_NEAR(var * 512, 1.0, 0.2);
  for (Real x : model.param("b0").data()) EXPECT_EQ(x, 0);
}

TEST(Init, SeedDeterminism) {
  auto c = TinyTransformer(9, 8);
  TransformerModel a(c), b(c), d(c);
  InitModel(a, 5);
  InitModel(b, 5);
  InitModel(d, 6);
  EXPECT_EQ(CheckpointBytes(a), CheckpointBytes(b));
  EXPECT_NE(a.param("embed"), d.param("embed"));
}

TEST(CrossEntropy, Examples) {
  std::vector<TokenId> t{3, 0};
  EXPECT_NEAR(CrossEntropyValue(Tensor({2, 16}), t), std::log(16.0), 1e-12);
  Tensor sharp({1, 3});
  sharp.at(0, 1) = 1000;
  std::vector<TokenId> one{1};
  EXPECT_LT(CrossEntropyValue(sharp, one), 1e-12);
  // Rows (1, 2, 0) target 1 and (0, 0, ln 2) target 2.
  Tensor two = Tensor::Matrix(2, 3, {1, 2, 0, 0, 0, std::log(2.0)});
  std::vector<TokenId> tg{1, 2};
  const double l0 = -(2 - std::log(std::exp(1.0) + std::exp(2.0) + 1));
  const double l1 = -(std::log(2.0) - std::log(4.0));
  EXPECT_NEAR(CrossEntropyValue(two, tg), (l0 + l1) / 2, 1e-12);
}

ParamList Scalar(double theta) { return {{"theta", Tensor::Vector({theta})}}; }

TEST(Sgd, ZeroLearningRateIsNoOp) {
  Rng rng(1);
  ParamList p{{"w", testing::RandomTensor(rng, {3, 4})}};
  const ParamList before = p;
  std::vector<Tensor> g{testing::RandomTensor(rng, {3, 4})};
  TrainConfig c;
  c.learning_rate = 0;
  c.weight_decay = 0.5;
  for (std::size_t s = 0; s < 10; ++s) SgdStep(p, g, c, s);
  EXPECT_EQ(p[0].value, before[0].value);
}

TEST(Sgd, QuadraticBowlStep) {
  ParamList p = Scalar(1);
  std::vector<Tensor> g{Tensor::Vector({2 * 1.0})};
  TrainConfig c;
  c.learning_rate = 0.1;
  c.clip_norm = 0;
  SgdStep(p, g, c, 0);
  EXPECT_DOUBLE_EQ(p[0].value[0], 0.8);
}

TEST(Sgd, ClipRescalesGlobalNorm) {
  std::vector<Tensor> g{Tensor::Vector({3}), Tensor::Vector({4})};
  EXPECT_DOUBLE_EQ(ClipGlobalNorm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0][0], 0.6, 1e-15);
  EXPECT_NEAR(g[1][0], 0.8, 1e-15);
  std::vector<Tensor> small{Tensor::Vector({0.1})};
  ClipGlobalNorm(small, 1.0);
  EXPECT_EQ(small[0][0], 0.1);
}

TEST(Sgd, ConvexSequenceConverges) {
  // f = (theta - 3)^2 from theta = -5.
  ParamList p = Scalar(-5);
  TrainConfig c;
  c.learning_rate = 0.1;
  c.clip_norm = 0;
  std::size_t step = 0;
  for (; step < 1000 && std::abs(p[0].value[0] - 3) > 1e-6; ++step) {
    std::vector<Tensor> g{Tensor::Vector({2 * (p[0].value[0] - 3)})};
    SgdStep(p, g, c, step);
  }
  EXPECT_NEAR(p[0].value[0], 3, 1e-6);
  EXPECT_LT(step, 1000u);
}

TEST(Sgd, WeightDecayTerm) {
  ParamList p = Scalar(2);
  std::vector<Tensor> g{Tensor::Vector({0})};
  TrainConfig c;
  c.learning_rate = 0.1;
  c.weight_decay = 0.5;
  SgdStep(p, g, c, 0);
  EXPECT_DOUBLE_EQ(p[0].value[0], 2 - 0.1 * 0.5 * 2);
}

TEST(Optimizer, NonFiniteGradientNamesStep) {
  ParamList p = Scalar(1);
  std::vector<Tensor> g{Tensor::Vector({std::nan("")})};
  TrainConfig c;
  Optimizer opt(c, p, 10);
  try {
    opt.Step(p, g, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("step 7"), std::string::npos) << e.what();
  }
}

std::vector<TokenId> MarkovStream(std::size_t n, std::uint64_t seed, double* entropy_rate) {
  // Four states on ids 3..6; rows of the transition matrix.
  const double p[4][4] = {{0.7, 0.1, 0.1, 0.1}, {0.05, 0.05, 0.85, 0.05}, {0.3, 0.3, 0.2, 0.2},
                          {0.1, 0.6, 0.1, 0.2}};
  // Stationary distribution by power iteration.
  std::vector<double> pi(4, 0.25);
  for (int it = 0; it < 1000; ++it) {
    std::vector<double> next(4, 0);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) next[b] += pi[a] * p[a][b];
    }
    pi = next;
  }
  double h = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) h -= pi[a] * p[a][b] * std::log(p[a][b]);
  }
  *entropy_rate = h;
  Rng rng(seed);
  std::vector<TokenId> ids{3};
  while (ids.size() < n) {
    const auto& row = p[ids.back() - 3];
    ids.push_back(static_cast<TokenId>(3 + rng.Categorical(std::vector<double>(row, row + 4))));
  }
  return ids;
}

TEST(Train, OverfitsSingleSequence) {
  Rng rng(2);
  std::vector<TokenId> seq(32);
  for (auto& t : seq) t = static_cast<TokenId>(3 + rng.Index(13));
  TransformerModel model(TinyTransformer(16, 32));
  InitModel(model, 1);
  Batch batch;
  batch.seq_len = 32;
  batch.inputs.push_back(Vocab::kBos);
  batch.inputs.insert(batch.inputs.end(), seq.begin(), seq.end() - 1);
  batch.targets = seq;
  batch.weights.assign(32, 1);
  TrainConfig c;
  c.optimizer = "sgd";
  c.learning_rate = 0.1;
  c.momentum = 0.9;
  c.clip_norm = 0;
  Optimizer opt(c, model.params(), 2000);
  double loss = 1e9;
  std::size_t step = 0;
  for (; step < 2000 && loss >= 0.05; ++step) {
    auto g = ComputeGradients(model, batch);
    loss = g.loss;
    opt.Step(model.params(), g.grads, step);
  }
  EXPECT_LT(loss, 0.05) << "after " << step << " steps";
}

TEST(Train, MarkovChainReachesEntropyRate) {
  double h = 0;
  auto stream = MarkovStream(40000, 11, &h);
  TransformerModel model(TinyTransformer(7, 16));
  InitModel(model, 1);
  TrainConfig c;
  c.optimizer = "adam";
  c.learning_rate = 3e-3;
  c.batch_tokens = 512;
  c.steps = 600;
  c.eval_every = 600;
  auto record = TrainOnStream(model, stream, c);
  ASSERT_FALSE(record.diverged) << record.divergence;
  const auto& last = record.evals.back();
  ASSERT_EQ(last.split, "test");
  EXPECT_LT(std::abs(last.loss - h) / h, 0.05) << "test loss " << last.loss << " entropy rate " << h;
}

TEST(Train, HugeLearningRateDiverges) {
  double h = 0;
  auto stream = MarkovStream(2000, 3, &h);
  TransformerModel model(TinyTransformer(7, 16));
  InitModel(model, 1);
  TrainConfig c;
  c.learning_rate = 1e3;
  c.clip_norm = 0;
  c.batch_tokens = 256;
  c.steps = 200;
  c.eval_every = 1000;
  auto record = TrainOnStream(model, stream, c);
  EXPECT_TRUE(record.diverged);
  EXPECT_NE(record.divergence.find("step"), std::string::npos);
  EXPECT_LT(record.steps_done, 200u);
}

TEST(Train, ZeroLearningRateLeavesParams) {
  double h = 0;
  auto stream = MarkovStream(3000, 3, &h);
  TransformerModel model(TinyTransformer(7, 16));
  InitModel(model, 1);
  const std::string before = CheckpointBytes(model);
  TrainConfig c;
  c.learning_rate = 0;
  c.momentum = 0.9;
  c.weight_decay = 0.1;
  c.batch_tokens = 128;
  c.steps = 25;
  c.eval_every = 10;
  TrainOnStream(model, stream, c);
  EXPECT_EQ(CheckpointBytes(model), before);
}

TEST(Train, BatchWithoutWeightsIsRejected) {
  TransformerModel model(TinyTransformer(5, 4));
  Batch b;
  b.seq_len = 4;
  b.inputs = {3, 4, 3, 4};
  b.targets = {4, 3, 4, 3};
  try {
    ComputeGradients(model, b);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension) << e.what();
  }
  b.weights.assign(4, 1);
  EXPECT_GT(ComputeGradients(model, b).weight, 0);
}

TEST(Train, ShardedGradientsMatchSingleWorker) {
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(30 + trial);
    TransformerModel model(TinyTransformer(9, 8));
    testing::RandomizeParams(model, rng, 0.3);
    Batch b;
    b.seq_len = 8;
    for (int i = 0; i < 8 * 5; ++i) {
      b.inputs.push_back(static_cast<TokenId>(rng.Index(9)));
      b.targets.push_back(static_cast<TokenId>(rng.Index(9)));
      b.weights.push_back(static_cast<Real>(rng.Index(3)));
    }
    auto one = ComputeGradients(model, b);
    for (std::size_t shards : {2, 3}) {
      auto many = ComputeGradientsSharded(model, b, shards);
      EXPECT_NEAR(many.loss, one.loss, 1e-12);
      for (std::size_t i = 0; i < one.grads.size(); ++i) {
        for (std::size_t k = 0; k < one.grads[i].size(); ++k) {
          ASSERT_NEAR(many.grads[i][k], one.grads[i][k], 1e-10);
        }
      }
    }
  }
}

std::string Metrics(const RunRecord& r) {
  std::ostringstream s;
  WriteMetricsJsonl(s, r);
  return s.str();
}

TEST(Train, Reproducible) {
  double h = 0;
  auto stream = MarkovStream(4000, 5, &h);
  std::string ckpt[2], metrics[2];
  for (int run = 0; run < 2; ++run) {
    TransformerModel model(TinyTransformer(7, 16));
    InitModel(model, 9);
    TrainConfig c;
    c.seed = 9;
    c.batch_tokens = 128;
    c.steps = 30;
    c.eval_every = 10;
    c.workers = 2;
    auto r = TrainOnStream(model, stream, c);
    ckpt[run] = CheckpointBytes(model);
    metrics[run] = Metrics(r);
  }
  EXPECT_EQ(ckpt[0], ckpt[1]);
  EXPECT_EQ(metrics[0], metrics[1]);
}

TEST(Train, SplitHygiene) {
  const std::size_t n = 1003, seq = 16;
  const auto split = SplitStream(n, 0.1);
  EXPECT_EQ(split.train_end, n - 100);
  std::vector<TokenId> stream(n);
  for (std::size_t i = 0; i < n; ++i) stream[i] = static_cast<TokenId>(i);  // id = position
  std::set<std::size_t> train_targets, test_targets;
  const auto train_starts = BlockStarts(0, split.train_end, seq);
  const auto test_starts = BlockStarts(split.train_end, n, seq);
  auto tb = MakeStreamBatch(stream, train_starts, split.train_end, seq);
  for (std::size_t i = 0; i < tb.targets.size(); ++i) {
    if (tb.weights[i] > 0) train_targets.insert(static_cast<std::size_t>(tb.targets[i]));
  }
  auto eb = MakeStreamBatch(stream, test_starts, n, seq);
  for (std::size_t i = 0; i < eb.targets.size(); ++i) {
    if (eb.weights[i] > 0) test_targets.insert(static_cast<std::size_t>(eb.targets[i]));
  }
  EXPECT_EQ(train_targets.size(), split.train_end);
  EXPECT_EQ(test_targets.size(), n - split.train_end);
  for (std::size_t t : test_targets) EXPECT_EQ(train_targets.count(t), 0u);
  // Inputs are the previous token, BOS at the very start.
  EXPECT_EQ(tb.inputs[0], Vocab::kBos);
  EXPECT_EQ(tb.inputs[1], stream[0]);
}

TEST(Train, EvaluationCadence) {
  double h = 0;
  auto stream = MarkovStream(3000, 3, &h);
  TransformerModel model(TinyTransformer(7, 16));
  InitModel(model, 1);
  TrainConfig c;
  c.batch_tokens = 128;
  c.steps = 25;
  c.eval_every = 10;
  std::vector<std::size_t> seen;
  auto r = TrainOnStream(model, stream, c, [&](const EvalPoint& e) { seen.push_back(e.step); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 0, 10, 10, 20, 20, 25, 25}));
  EXPECT_EQ(r.steps_done, 25u);
  for (const auto& e : r.evals) EXPECT_TRUE(std::isfinite(e.loss));
}

TEST(Task, ModSevenMemorised) {
  Rng rng(1);
  ModularAddConfig mc;
  mc.modulus = 7;
  mc.train_fraction = 1.0;
  auto data = MakeModularAdd(mc, rng);
  ASSERT_EQ(data.train.size(), 49u);
  auto tc = TinyTransformer(data.vocab.size(), 8);
  TransformerModel model(tc);
  InitModel(model, 2);
  TrainConfig c;
  c.optimizer = "adam";
  c.learning_rate = 3e-3;
  c.batch_tokens = 49 * 5;
  c.steps = 400;
  c.eval_every = 50;
  auto r = TrainOnTask(model, data.train, data.test, c);
  EXPECT_EQ(ScoreTask(model, data.train).accuracy, 1.0);
  EXPECT_TRUE(r.FirstStepReaching("train", 1.0).has_value());
}

TEST(Task, BatchScoresOnlyAnswerPosition) {
  std::vector<TaskExample> ex{{{5, 6, 7}, 8}, {{5}, 9}};
  auto b = MakeTaskBatch(ex);
  EXPECT_EQ(b.seq_len, 4u);
  EXPECT_EQ(b.inputs, (std::vector<TokenId>{Vocab::kBos, 5, 6, 7, Vocab::kBos, 5, Vocab::kEos, Vocab::kEos}));
  EXPECT_EQ(b.weights, (std::vector<Real>{0, 0, 0, 1, 0, 1, 0, 0}));
  EXPECT_EQ(b.targets[3], 8);
  EXPECT_EQ(b.targets[5], 9);
}

TEST(Metrics, JsonLinesSchema) {
  RunRecord r;
  r.evals.push_back({0, "train", 1.5, 0.25, 12.0});
  r.evals.push_back({0, "test", 1.75, std::nullopt, 13.0});
  std::istringstream in(Metrics(r));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["format_version"], 1);
  EXPECT_EQ(rows[0]["metric"], "loss");
  EXPECT_EQ(rows[1]["metric"], "accuracy");
  EXPECT_EQ(rows[1]["value"], 0.25);
  EXPECT_EQ(rows[2]["split"], "test");
  EXPECT_FALSE(rows[0].contains("wall_ms"));
  std::ostringstream csv;
  WriteSummaryCsv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "format_version,step,split,loss,accuracy");
}

TEST(TrainConfig, KeyValueRoundTrip) {
  TrainConfig c;
  c.learning_rate = 0.25;
  c.optimizer = "adam";
  c.cosine = true;
  auto kv = KeyValues::Parse(c.ToText());
  EXPECT_EQ(TrainConfig::FromKeyValues(kv).ToText(), c.ToText());
  c.eval_fraction = 1.5;
  EXPECT_THROW(c.Validate(), Error);
}

}  // namespace
}  // namespace lmlab
