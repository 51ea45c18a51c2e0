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
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include "lmlab/ffn_lm.h"
#include "lmlab/model.h"
#include "lmlab/rnn.h"
#include "lmlab/sampling.h"
#include "lmlab/text.h"
#include "lmlab/transformer.h"
#include "test_util.h"

namespace lmlab {
namespace {

using testing::RandomizeParams;
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat ToMat(const Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  }
  return m;
}

Vec Apply(const Mat& w, const Vec& x) {  // w x
  Vec y(w.size(), 0);
  for (std::size_t r = 0; r < w.size(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += w[r][c] * x[c];
  }
  return y;
}

Vec Relu(Vec x) {
  for (auto& a : x) a = std::max(0.0, a);
  return x;
}

Vec LayerNorm(const Vec& x) {
  double mu = 0, var = 0;
  for (double a : x) mu += a;
  mu /= static_cast<double>(x.size());
  for (double a : x) var += (a - mu) * (a - mu);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mu) / std::sqrt(var + 1e-5);
  return y;
}

Vec Param1(const NeuralModel& m, const std::string& name) {
  const auto d = m.param(name).data();
  return {d.begin(), d.end()};
}

// Scalar-loop transformer over one sequence.
Mat OracleTransformer(const TransformerModel& model, const std::vector<TokenId>& ids) {
  const auto& c = model.config();
  const std::size_t n = ids.size(), p = c.dim, q = c.head_dim(), wd = c.word_dim();
  const Mat embed = ToMat(model.param("embed"));
  Mat u(n, Vec(p, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < wd; ++a) u[i][a] = embed[ids[i]][a];
    for (std::size_t k = 1; k <= c.pos_dim / 2; ++k) {
      const double angle = i / std::pow(10000.0, 2.0 * k / c.pos_dim);
      const std::size_t base = c.additive_positions ? 0 : wd;
      u[i][base + 2 * k - 2] += std::cos(angle);
      u[i][base + 2 * k - 1] += std::sin(angle);
    }
  }
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Mat h = u;
    if (c.layer_norm) {
      for (auto& row : h) row = LayerNorm(row);
    }
    Mat o(n, Vec(p, 0));
    if (l % 2 == 0) {
      const Mat value = ToMat(model.param(pre + "value"));
      for (std::size_t head = 0; head < c.heads; ++head) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t limit = c.causal ? i + 1 : n;
          Vec s(limit, 0);
          for (std::size_t j = 0; j < limit; ++j) {
            if (c.dense_bilinear) {
              const Mat b = ToMat(model.param(pre + "bilinear"));
              for (std::size_t x = 0; x < p; ++x) {
                for (std::size_t y = 0; y < p; ++y) s[j] += h[i][x] * b[x][head * p + y] * h[j][y];
              }
            } else {
              const Mat wq = ToMat(model.param(pre + "query"));
              const Mat wk = ToMat(model.param(pre + "key"));
              for (std::size_t r = head * q; r < (head + 1) * q; ++r) {
                double qi = 0, kj = 0;
                for (std::size_t x = 0; x < p; ++x) {
                  qi += wq[r][x] * h[i][x];
                  kj += wk[r][x] * h[j][x];
                }
                s[j] += qi * kj;
              }
            }
          }
          const double mx = *std::max_element(s.begin(), s.end());
          double z = 0;
          for (auto& a : s) z += (a = std::exp(a - mx));
          for (std::size_t r = head * q; r < (head + 1) * q; ++r) {
            for (std::size_t j = 0; j < limit; ++j) {
              double wv = 0;
              for (std::size_t x = 0; x < p; ++x) wv += value[r][x] * h[j][x];
              o[i][r] += s[j] / z * wv;
            }
          }
        }
      }
      if (c.out_proj) {
        const Mat out = ToMat(model.param(pre + "out"));
        for (auto& row : o) row = Apply(out, row);
      }
    } else {
      const Mat w0 = ToMat(model.param(pre + "w0")), w1 = ToMat(model.param(pre + "w1"));
      const Vec b0 = Param1(model, pre + "b0"), b1 = Param1(model, pre + "b1");
      for (std::size_t i = 0; i < n; ++i) {
        Vec z = Apply(w0, h[i]);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += b0[k];
        o[i] = Apply(w1, Relu(z));
        for (std::size_t k = 0; k < p; ++k) o[i][k] += b1[k];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < p; ++k) u[i][k] = c.residual ? u[i][k] + o[i][k] : o[i][k];
    }
  }
  if (c.layer_norm) {
    for (auto& row : u) row = LayerNorm(row);
  }
  Mat logits(n, Vec(c.vocab_size, 0));
  const Mat dec = c.tied_decoder ? embed : ToMat(model.param("decoder"));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t w = 0; w < c.vocab_size; ++w) {
      for (std::size_t a = 0; a < dec[w].size(); ++a) logits[i][w] += u[i][a] * dec[w][a];
    }
  }
  return logits;
}

TransformerConfig RandomConfig(Rng& rng) {
  TransformerConfig c;
  c.vocab_size = 4 + rng.Index(5);
  c.heads = 1 + rng.Index(3);
  c.dim = c.heads * (2 + rng.Index(3));
  c.additive_positions = rng.Index(4) == 0;
  c.pos_dim = c.additive_positions ? (c.dim % 2 == 0 ? c.dim : 0) : 2 * rng.Index(c.dim / 2);
  c.window = 3 + rng.Index(4);
  c.layers = rng.Index(5);
  c.hidden = 2 + rng.Index(6);
  c.residual = rng.Index(3) != 0;
  c.layer_norm = rng.Index(3) == 0;
  c.tied_decoder = rng.Index(3) != 0;
  c.dense_bilinear = rng.Index(3) == 0;
  c.causal = rng.Index(5) != 0;
  c.out_proj = rng.Index(2) == 0;
  return c;
}

std::vector<TokenId> RandomIds(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> ids(n);
  for (auto& t : ids) t = static_cast<TokenId>(rng.Index(vocab));
  return ids;
}

void ExpectRowsNear(const Tensor& got, const Mat& want, double tol) {
  ASSERT_EQ(got.rows(), want.size());
  for (std::size_t r = 0; r < want.size(); ++r) {
    ASSERT_EQ(got.cols(), want[r].size());
    for (std::size_t c = 0; c < want[r].size(); ++c) {
      EXPECT_NEAR(got.at(r, c), want[r][c], tol) << "row " << r << " col " << c;
    }
  }
}

TEST(PositionalEncoding, Examples) {
  Tensor pe = PositionalEncoding(3, 6);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(pe.at(0, 2 * k), 1);
    EXPECT_EQ(pe.at(0, 2 * k + 1), 0);
  }
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(pe.at(s, 2 * k) * pe.at(s, 2 * k) + pe.at(s, 2 * k + 1) * pe.at(s, 2 * k + 1), 1,
                  1e-15);
    }
  }
  Tensor two = PositionalEncoding(2, 2);
  EXPECT_NEAR(two.at(1, 0), std::cos(1e-4), 1e-15);
  EXPECT_NEAR(two.at(1, 0), 0.999999995, 1e-12);
  EXPECT_NEAR(two.at(1, 1), 1e-4, 1e-12);
  EXPECT_THROW(PositionalEncoding(2, 3), Error);
}

TEST(TransformerConfig, Validation) {
  TransformerConfig c;
  c.vocab_size = 10;
  c.dim = 10;
  c.heads = 3;
  EXPECT_THROW(c.Validate(), Error);
  c.heads = 2;
  c.pos_dim = 3;
  EXPECT_THROW(c.Validate(), Error);
  c.pos_dim = 4;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(TransformerConfig::FromText(c.ToText()).ToText(), c.ToText());
}

TEST(AttentionLayer, SinglePosition) {
  Rng rng(1);
  for (bool residual : {false, true}) {
    TransformerConfig c;
    c.vocab_size = 5;
    c.dim = 4;
    c.heads = 2;
    c.residual = residual;
    Tape tape;
    AttentionParams ap{tape.Leaf(testing::RandomTensor(rng, {4, 4})),
                       tape.Leaf(testing::RandomTensor(rng, {4, 4})), {},
                       tape.Leaf(testing::RandomTensor(rng, {4, 4})), {}};
    Tensor u = testing::RandomTensor(rng, {1, 4});
    Tensor out = AttentionLayer(ap, tape.Leaf(u), 1, c).value();
    const Tensor& w = ap.value.value();
    for (std::size_t r = 0; r < 4; ++r) {
      double want = residual ? u[r] : 0;
      for (std::size_t x = 0; x < 4; ++x) want += w.at(r, x) * u[x];
      EXPECT_NEAR(out[r], want, 1e-14);
    }
  }
}

TEST(AttentionLayer, ZeroFormGivesUniformWeights) {
  Rng rng(2);
  TransformerConfig c;
  c.vocab_size = 5;
  c.dim = 4;
  c.heads = 2;
  Tape tape;
  AttentionParams ap{tape.Leaf(Tensor({4, 4})), tape.Leaf(testing::RandomTensor(rng, {4, 4})), {},
                     tape.Leaf(testing::RandomTensor(rng, {4, 4})), {}};
  AttentionCapture cap;
  AttentionLayer(ap, tape.Leaf(testing::RandomTensor(rng, {5, 4})), 5, c, &cap);
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j <= i; ++j) EXPECT_NEAR(cap.weights[0][h].at(i, j), 1.0 / (i + 1), 1e-15);
    }
  }
}

TEST(FfnLayer, ZeroWeightsWithResidualIsIdentity) {
  Rng rng(3);
  Tape tape;
  FfnParams fp{tape.Leaf(Tensor({6, 4})), tape.Leaf(Tensor({6})), tape.Leaf(Tensor({4, 6})),
               tape.Leaf(Tensor({4}))};
  Tensor u = testing::RandomTensor(rng, {3, 4});
  EXPECT_EQ(FfnLayer(fp, tape.Leaf(u), true).value(), u);
}

TEST(FfnLayer, PositionIndependentAndMatchesLoop) {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(100 + trial);
    const std::size_t p = 2 + rng.Index(5), ph = 1 + rng.Index(8), n = 1 + rng.Index(6);
    Tape tape;
    FfnParams fp{tape.Leaf(testing::RandomTensor(rng, {ph, p})), tape.Leaf(testing::RandomTensor(rng, {ph})),
                 tape.Leaf(testing::RandomTensor(rng, {p, ph})), tape.Leaf(testing::RandomTensor(rng, {p}))};
    Tensor u = testing::RandomTensor(rng, {n, p});
    Tensor out = FfnLayer(fp, tape.Leaf(u), false).value();
    const Mat w0 = ToMat(fp.w0.value()), w1 = ToMat(fp.w1.value());
    for (std::size_t i = 0; i < n; ++i) {
      Vec z = Apply(w0, Vec(u.row(i).begin(), u.row(i).end()));
      for (std::size_t k = 0; k < ph; ++k) z[k] += fp.b0.value()[k];
      Vec y = Apply(w1, Relu(z));
      for (std::size_t k = 0; k < p; ++k) EXPECT_NEAR(out.at(i, k), y[k] + fp.b1.value()[k], 1e-10);
    }
    std::vector<TokenId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Tensor permuted = FfnLayer(fp, GatherRows(tape.Leaf(u), perm), false).value();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < p; ++k) EXPECT_EQ(permuted.at(i, k), out.at(perm[i], k));
    }
  }
}

TEST(Transformer, MatchesLoopOracleOnRandomConfigs) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(200 + trial);
    TransformerConfig c = RandomConfig(rng);
    TransformerModel model(c);
    RandomizeParams(model, rng);
    auto ids = RandomIds(rng, 1 + rng.Index(c.window), c.vocab_size);
    ExpectRowsNear(model.ForwardValues(ids), OracleTransformer(model, ids), 1e-10);
    if (HasFailure()) FAIL() << "config:\n" << c.ToText();
  }
}

TEST(Transformer, HandComputedOneLayer) {
  TransformerConfig c;
  c.vocab_size = 2;
  c.dim = 2;
  c.pos_dim = 0;
  c.heads = 1;
  c.layers = 1;
  c.residual = false;
  TransformerModel model(c);
  model.param("embed") = Tensor::Matrix(2, 2, {1, 0, 0, 1});
  model.param("layer0.query") = Tensor::Matrix(2, 2, {1, 0, 0, 1});
  model.param("layer0.key") = Tensor::Matrix(2, 2, {1, 0, 0, 1});
  model.param("layer0.value") = Tensor::Matrix(2, 2, {1, 0, 0, 1});
  std::vector<TokenId> ids{0, 1};
  Tensor logits = model.ForwardValues(ids);
  // Position 0 attends only to itself; position 1 scores (0, 1) over (u0, u1).
  const double e = std::exp(1.0);
  EXPECT_DOUBLE_EQ(logits.at(0, 0), 1);
  EXPECT_DOUBLE_EQ(logits.at(0, 1), 0);
  EXPECT_NEAR(logits.at(1, 0), 1 / (1 + e), 1e-15);
  EXPECT_NEAR(logits.at(1, 1), e / (1 + e), 1e-15);
}

TEST(Transformer, WindowOverflowNamesL) {
  TransformerConfig c;
  c.vocab_size = 5;
  c.dim = 8;
  c.pos_dim = 4;
  c.window = 4;
  c.layers = 1;
  TransformerModel model(c);
  std::vector<TokenId> ids(5, 3);
  try {
    model.ForwardValues(ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
    EXPECT_NE(std::string(e.what()).find("L=4"), std::string::npos);
  }
}

TEST(Transformer, PermutationEquivarianceWithoutPositionsOrMask) {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(300 + trial);
    TransformerConfig c = RandomConfig(rng);
    c.pos_dim = 0;
    c.additive_positions = false;
    c.causal = false;
    TransformerModel model(c);
    RandomizeParams(model, rng);
    auto ids = RandomIds(rng, c.window, c.vocab_size);
    std::vector<std::size_t> perm(ids.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<TokenId> permuted(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) permuted[i] = ids[perm[i]];
    Tensor a = model.ForwardValues(ids), b = model.ForwardValues(permuted);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t w = 0; w < c.vocab_size; ++w) EXPECT_NEAR(b.at(i, w), a.at(perm[i], w), 1e-10);
    }
  }
}

std::vector<std::unique_ptr<NeuralModel>> RandomModels(Rng& rng) {
  std::vector<std::unique_ptr<NeuralModel>> models;
  auto tc = RandomConfig(rng);
  tc.causal = true;
  models.push_back(std::make_unique<TransformerModel>(tc));
  RnnConfig rc;
  rc.vocab_size = 4 + rng.Index(4);
  rc.dim = 2 + rng.Index(3);
  rc.state = 1 + rng.Index(3);
  rc.recent = 1 + rng.Index(3);
  rc.hidden = 2 + rng.Index(5);
  rc.window = 3 + rng.Index(4);
  models.push_back(std::make_unique<RnnModel>(rc));
  FfnLmConfig fc;
  fc.vocab_size = 4 + rng.Index(4);
  fc.dim = 2 + rng.Index(3);
  fc.context = 1 + rng.Index(4);
  fc.hidden = 2 + rng.Index(5);
  models.push_back(std::make_unique<FfnLmModel>(fc));
  for (auto& m : models) RandomizeParams(*m, rng);
  return models;
}

TEST(Models, CausalityBitExact) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(400 + trial);
    for (auto& model : RandomModels(rng)) {
      const std::size_t n = std::max<std::size_t>(2, model->window());
      auto ids = RandomIds(rng, n, model->vocab_size());
      Tensor before = model->ForwardValues(ids);
      const std::size_t j = 1 + rng.Index(n - 1);
      for (std::size_t k = j; k < n; ++k) ids[k] = static_cast<TokenId>(rng.Index(model->vocab_size()));
      Tensor after = model->ForwardValues(ids);
      for (std::size_t i = 0; i < j; ++i) {
        for (std::size_t w = 0; w < model->vocab_size(); ++w) {
          ASSERT_EQ(before.at(i, w), after.at(i, w)) << ModelKindName(model->kind()) << " row " << i;
        }
      }
    }
  }
}

TEST(Models, ChainRuleMatchesPerPrefixScoring) {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(500 + trial);
    for (auto& model : RandomModels(rng)) {
      // Long enough to cross several sliding windows.
      auto ids = RandomIds(rng, 3 * model->window() + 2, model->vocab_size());
      const auto seq = model->SequenceLogProbs(ids);
      ASSERT_EQ(seq.size(), ids.size());
      // Within the first window every prefix is fully visible.
      const std::size_t visible = std::min(ids.size(), model->window() - 1);
      for (std::size_t i = 0; i < visible; ++i) {
        auto logits = model->NextLogits(std::span<const TokenId>(ids.data(), i));
        EXPECT_NEAR(seq[i], LogSoftmaxValues(logits)[ids[i]], 1e-12) << ModelKindName(model->kind());
      }
      // Blocked and unblocked forward passes agree.
      std::vector<TokenId> two_blocks(ids.begin(), ids.begin() + model->window());
      two_blocks.insert(two_blocks.end(), ids.begin() + 1, ids.begin() + 1 + model->window());
      Tape tape;
      auto vars = model->Bind(tape, false);
      Tensor batched = model->Forward(tape, vars, two_blocks, model->window()).value();
      for (std::size_t b = 0; b < 2; ++b) {
        std::vector<TokenId> block(two_blocks.begin() + b * model->window(),
                                   two_blocks.begin() + (b + 1) * model->window());
        Tensor single = model->ForwardValues(block);
        for (std::size_t i = 0; i < single.rows(); ++i) {
          for (std::size_t w = 0; w < single.cols(); ++w) {
            EXPECT_NEAR(batched.at(b * model->window() + i, w), single.at(i, w), 1e-12);
          }
        }
      }
    }
  }
}

TEST(Models, GradientsMatchFiniteDifferences) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(600 + trial);
    for (auto& model : RandomModels(rng)) {
      const std::size_t t = model->window();
      auto inputs = RandomIds(rng, 2 * t, model->vocab_size());
      auto targets = RandomIds(rng, 2 * t, model->vocab_size());
      auto check = testing::CheckModelGradients(*model, inputs, targets, t);
      ASSERT_LT(check.max_rel, 1e-4) << ModelKindName(model->kind()) << " trial " << trial << ": "
                                     << check.worst << "\n" << model->ConfigText();
    }
  }
}

// Independent recurrence: x = [s | e(w_i), e(w_{i-1}), ...], o = W1 relu(W0 x + b0) + b1.
TEST(Rnn, MatchesSequentialOracle) {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(700 + trial);
    RnnConfig c;
    c.vocab_size = 6;
    c.dim = 3;
    c.state = 2 + rng.Index(3);
    c.recent = 1 + rng.Index(3);
    c.hidden = 5;
    c.window = 5;
    RnnModel model(c);
    RandomizeParams(model, rng);
    auto ids = RandomIds(rng, 5, c.vocab_size);
    const Mat e = ToMat(model.param("embed")), w0 = ToMat(model.param("w0")), w1 = ToMat(model.param("w1"));
    const Vec b0 = Param1(model, "b0"), b1 = Param1(model, "b1");
    Tensor got = model.ForwardValues(ids);
    Vec s(c.state, 0);
    Tensor state({c.state});
    for (std::size_t i = 0; i < 5; ++i) {
      Vec x = s;
      Tensor recent({c.recent, c.dim});
      for (std::size_t back = 0; back < c.recent; ++back) {
        const TokenId w = back <= i ? ids[i - back] : Vocab::kBos;
        x.insert(x.end(), e[w].begin(), e[w].end());
        for (std::size_t a = 0; a < c.dim; ++a) recent.at(back, a) = e[w][a];
      }
      Vec z = Apply(w0, x);
      for (std::size_t k = 0; k < z.size(); ++k) z[k] += b0[k];
      Vec o = Apply(w1, Relu(z));
      for (std::size_t k = 0; k < o.size(); ++k) o[k] += b1[k];
      for (std::size_t w = 0; w < c.vocab_size; ++w) {
        double logit = 0;
        for (std::size_t a = 0; a < c.dim; ++a) logit += o[a] * e[w][a];
        EXPECT_NEAR(got.at(i, w), logit, 1e-10);
      }
      auto step = RnnStep(model, state, recent);
      state = step.next_state;
      s.assign(o.begin() + c.dim, o.end());
      for (std::size_t k = 0; k < c.state; ++k) EXPECT_NEAR(state[k], s[k], 1e-10);
    }
  }
}

TEST(Rnn, ZeroWeightsGiveZeros) {
  RnnConfig c;
  c.vocab_size = 5;
  c.dim = 2;
  c.state = 3;
  c.hidden = 4;
  RnnModel model(c);
  Rng rng(1);
  model.param("embed") = testing::RandomTensor(rng, {5, 2});
  auto r = RnnStep(model, testing::RandomTensor(rng, {3}), testing::RandomTensor(rng, {1, 2}));
  for (Real x : r.logits) EXPECT_EQ(x, 0);
  for (Real x : r.next_state.data()) EXPECT_EQ(x, 0);
}

TEST(Rnn, HandSetStateCopiesInput) {
  // hidden = [u; -u], next state = h+ - h-, so s_{i+1} = u_i.
  RnnConfig c;
  c.vocab_size = 5;
  c.dim = 2;
  c.state = 2;
  c.hidden = 4;
  RnnModel model(c);
  Tensor& w0 = model.param("w0");  // 4 x (2 + 2)
  w0.at(0, 2) = 1;
  w0.at(1, 3) = 1;
  w0.at(2, 2) = -1;
  w0.at(3, 3) = -1;
  Tensor& w1 = model.param("w1");  // (2 + 2) x 4
  w1.at(2, 0) = 1;
  w1.at(2, 2) = -1;
  w1.at(3, 1) = 1;
  w1.at(3, 3) = -1;
  Tensor u = Tensor::Matrix(1, 2, {0.7, -1.3});
  auto r = RnnStep(model, Tensor::Vector({5, 5}), u);
  EXPECT_DOUBLE_EQ(r.next_state[0], 0.7);
  EXPECT_DOUBLE_EQ(r.next_state[1], -1.3);
}

TEST(FfnLm, MatchesLoopOracle) {
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(800 + trial);
    FfnLmConfig c;
    c.vocab_size = 6;
    c.dim = 3;
    c.context = 1 + rng.Index(4);
    c.hidden = 7;
    FfnLmModel model(c);
    RandomizeParams(model, rng);
    auto window = RandomIds(rng, c.context, c.vocab_size);
    const Mat e = ToMat(model.param("embed")), w0 = ToMat(model.param("w0")), w1 = ToMat(model.param("w1"));
    const Vec b0 = Param1(model, "b0"), b1 = Param1(model, "b1");
    Vec x;
    for (TokenId w : window) x.insert(x.end(), e[w].begin(), e[w].end());
    Vec z = Apply(w0, x);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += b0[k];
    Vec o = Apply(w1, Relu(z));
    auto got = FfnLmForward(model, window);
    for (std::size_t w = 0; w < c.vocab_size; ++w) {
      double logit = 0;
      for (std::size_t a = 0; a < c.dim; ++a) logit += (o[a] + b1[a]) * e[w][a];
      EXPECT_NEAR(got[w], logit, 1e-10);
    }
    // Every slot matters.
    for (std::size_t slot = 0; slot < c.context; ++slot) {
      auto changed = window;
      changed[slot] = static_cast<TokenId>((changed[slot] + 1) % c.vocab_size);
      EXPECT_NE(FfnLmForward(model, changed), got) << "slot " << slot;
    }
  }
  FfnLmConfig c;
  c.vocab_size = 5;
  c.context = 3;
  FfnLmModel model(c);
  std::vector<TokenId> short_window{3, 4};
  EXPECT_THROW(FfnLmForward(model, short_window), Error);
}

TEST(CountParams, Gpt3Approximation) {
  TransformerConfig c;
  c.vocab_size = 50257;
  c.dim = 12288;
  c.heads = 96;
  c.layers = 96;
  c.hidden = 4 * 12288;
  c.window = 2048;
  c.pos_dim = 1536;
  const auto r = CountParams(c);
  EXPECT_NEAR(r.twelve_d_p2, 12.0 * 96 * 12288.0 * 12288.0, 1);
  EXPECT_NEAR(r.twelve_d_p2 / 175e9, 1.0, 0.03);
}

TEST(CountParams, ZeroLayersIsEmbeddingOnly) {
  TransformerConfig c;
  c.vocab_size = 11;
  c.dim = 8;
  c.pos_dim = 2;
  c.layers = 0;
  EXPECT_EQ(CountParams(c).exact, 11u * 6);
  c.tied_decoder = false;
  EXPECT_EQ(CountParams(c).exact, 11u * 6 + 11u * 8);
}

// Non-embedding parameters per attention + FFN pair are 12 p^2 + 5 p with
// the output map and p_h = 4p; D counts both layers of a pair.
TEST(CountParams, NonEmbeddingWithinFivePercentOfTwelveDP2) {
  for (std::size_t p : {64, 96, 128, 256, 512}) {
    for (std::size_t d : {2, 4, 8, 24}) {
      TransformerConfig c;
      c.vocab_size = 100;
      c.dim = p;
      c.heads = 4;
      c.hidden = 4 * p;
      c.layers = d;
      c.out_proj = true;
      const auto r = CountParams(c);
      const double approx = 12.0 * (d / 2.0) * p * p;
      EXPECT_NEAR(r.non_embedding / approx, 1.0, 0.05) << "p=" << p << " D=" << d;
    }
  }
}

TEST(Checkpoint, RoundTripAndCounts) {
  const auto dir = std::filesystem::temp_directory_path() / "lmlab_model_test";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(900 + trial);
    for (auto& model : RandomModels(rng)) {
      const std::string path = (dir / ("m" + std::to_string(trial) + ".ckpt")).string();
      SaveCheckpoint(*model, path);
      EXPECT_EQ(CheckpointParamCount(path), model->ParamCount());
      if (model->kind() == ModelKind::kTransformer) {
        const auto& tm = static_cast<const TransformerModel&>(*model);
        EXPECT_EQ(CountParams(tm.config()).exact, model->ParamCount());
      }
      auto loaded = LoadCheckpoint(path);
      EXPECT_EQ(loaded->ConfigText(), model->ConfigText());
      EXPECT_EQ(CheckpointBytes(*loaded), CheckpointBytes(*model));
    }
  }
  // Mismatched config is rejected rather than reshaped.
  FfnLmConfig a, b;
  a.vocab_size = b.vocab_size = 6;
  b.hidden = a.hidden + 1;
  FfnLmModel ma(a), mb(b);
  const std::string path = (dir / "mismatch.ckpt").string();
  SaveCheckpoint(ma, path);
  EXPECT_THROW(LoadCheckpointInto(mb, path), Error);
  std::filesystem::remove_all(dir);
}

// Fixed conditionals over a small vocabulary, independent of the prefix.
class FixedModel final : public LanguageModel {
 public:
  explicit FixedModel(std::vector<Real> logits) : logits_(std::move(logits)) {}
  std::size_t vocab_size() const override { return logits_.size(); }
  std::vector<Real> NextLogits(std::span<const TokenId>) const override { return logits_; }

 private:
  std::vector<Real> logits_;
};

constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

TEST(Sampling, DeterministicConditionals) {
  FixedModel m({kNegInf, kNegInf, kNegInf, kNegInf, 0});
  Rng rng(1);
  for (double t : {0.01, 1.0, 50.0}) {
    auto out = Sample(m, std::vector<TokenId>{3}, t, 5, rng);
    EXPECT_EQ(out, (std::vector<TokenId>{3, 4, 4, 4, 4, 4}));
  }
}

TEST(Sampling, StopsAtEos) {
  FixedModel m({kNegInf, 0, kNegInf, kNegInf});
  Rng rng(1);
  EXPECT_EQ(Sample(m, std::vector<TokenId>{}, 1.0, 10, rng), std::vector<TokenId>{1});
  EXPECT_THROW(Sample(m, std::vector<TokenId>{}, 0.0, 10, rng), Error);
}

TEST(Sampling, ColdLimitIsGreedy) {
  Rng rng(4);
  TransformerConfig c = RandomConfig(rng);
  c.causal = true;
  TransformerModel model(c);
  RandomizeParams(model, rng, 1.0);
  std::vector<TokenId> prompt{static_cast<TokenId>(c.vocab_size - 1)};
  auto greedy = Greedy(model, prompt, 10);
  Rng sample_rng(9);
  EXPECT_EQ(Sample(model, prompt, 1e-9, 10, sample_rng), greedy);
}

TEST(Sampling, FrequenciesMatchDecodeProbabilities) {
  FixedModel m({kNegInf, kNegInf, kNegInf, 0, static_cast<Real>(std::log(3.0))});
  for (double t : {1.0, 2.0}) {
    const double p = SoftmaxValues(m.NextLogits({}), 1.0 / t)[4];
    Rng rng(DeriveSeed(77, std::to_string(t)));
    const int n = 10000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += Sample(m, std::vector<TokenId>{}, t, 1, rng)[0] == 4;
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LT(std::abs(hits - n * p), 3 * sigma) << "T=" << t;
  }
}

TEST(Sampling, ReproducibleGivenSeed) {
  FixedModel m({kNegInf, 0.1, 0, 0.5, 0.2});
  Rng a(5), b(5);
  EXPECT_EQ(Sample(m, std::vector<TokenId>{}, 1.0, 50, a), Sample(m, std::vector<TokenId>{}, 1.0, 50, b));
}

}  // namespace
}  // namespace lmlab
