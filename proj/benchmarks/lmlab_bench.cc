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


#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "lmlab/cnf.h"
#include "lmlab/grammar.h"
#include "lmlab/ngram.h"
#include "lmlab/ops.h"
#include "lmlab/parse.h"
#include "lmlab/rng.h"
#include "lmlab/tape.h"
#include "lmlab/tensor.h"
#include "lmlab/train.h"
#include "lmlab/transformer.h"

namespace lmlab {
namespace {

Tensor Gaussian(Rng& rng, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = static_cast<Real>(rng.Normal());
  return t;
}

std::vector<TokenId> RandomIds(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> ids(n);
  for (auto& t : ids) t = static_cast<TokenId>(rng.Index(vocab));
  return ids;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = Gaussian(rng, {n, n});
  const Tensor b = Gaussian(rng, {n, n});
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm)->RangeMultiplier(2)->Range(32, 256);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const std::size_t blocks = 4, heads = 4, dk = 16;
  Rng rng(2);
  const Tensor q = Gaussian(rng, {blocks * t, heads * dk});
  const Tensor k = Gaussian(rng, {blocks * t, heads * dk});
  const Tensor v = Gaussian(rng, {blocks * t, heads * dk});
  const AttentionSpec spec{t, heads, true};
  for (auto _ : state) {
    Tape tape;
    Var out = Attention(tape.Leaf(q), tape.Leaf(k), tape.Leaf(v), spec);
    tape.Backward(Sum(out));
    benchmark::DoNotOptimize(out.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(blocks * t));
}
BENCHMARK(BM_AttentionForwardBackward)->RangeMultiplier(2)->Range(16, 128);

void BM_TransformerTrainStep(benchmark::State& state) {
  TransformerConfig c;
  c.vocab_size = 32;
  c.dim = static_cast<std::size_t>(state.range(0));
  c.pos_dim = 16;
  c.window = 64;
  c.layers = 4;
  c.heads = 4;
  c.hidden = 2 * c.dim;
  TransformerModel model(c);
  InitModel(model, 3);
  Rng rng(3);
  Batch batch;
  batch.seq_len = c.window;
  batch.inputs = RandomIds(rng, 8 * c.window, c.vocab_size);
  batch.targets = RandomIds(rng, 8 * c.window, c.vocab_size);
  batch.weights.assign(batch.targets.size(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeGradients(model, batch).loss);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.inputs.size()));
}
BENCHMARK(BM_TransformerTrainStep)->Arg(32)->Arg(64)->Arg(128);

void BM_CykParse(benchmark::State& state) {
  const Grammar g = Grammar::Builtin("fig3_pcfg");
  const CnfGrammar cnf = ToCnf(g);
  Rng rng(4);
  std::vector<SymbolId> tokens;
  while (tokens.size() < static_cast<std::size_t>(state.range(0))) {
    auto s = Generate(g, rng).tokens;
    if (!tokens.empty()) tokens.push_back(*g.Find("+"));
    tokens.insert(tokens.end(), s.begin(), s.end());
  }
  const auto mapped = cnf.MapTokens(tokens);
  for (auto _ : state) benchmark::DoNotOptimize(CykParse(cnf.grammar, mapped));
  state.counters["tokens"] = static_cast<double>(tokens.size());
}
BENCHMARK(BM_CykParse)->RangeMultiplier(2)->Range(8, 64);

void BM_InsideLogProb(benchmark::State& state) {
  const Grammar g = Grammar::Builtin("fig3_pcfg");
  const CnfGrammar cnf = ToCnf(g);
  Rng rng(5);
  std::vector<SymbolId> tokens;
  while (tokens.size() < static_cast<std::size_t>(state.range(0))) {
    auto s = Generate(g, rng).tokens;
    if (!tokens.empty()) tokens.push_back(*g.Find("*"));
    tokens.insert(tokens.end(), s.begin(), s.end());
  }
  const auto mapped = cnf.MapTokens(tokens);
  for (auto _ : state) benchmark::DoNotOptimize(InsideLogProb(cnf.grammar, mapped));
}
BENCHMARK(BM_InsideLogProb)->RangeMultiplier(2)->Range(8, 64);

void BM_NGramFit(benchmark::State& state) {
  Rng rng(6);
  const auto ids = RandomIds(rng, 100000, 64);
  const auto order = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(NGramModel::Fit(ids, order, 0.1, 64));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ids.size()));
}
BENCHMARK(BM_NGramFit)->DenseRange(1, 4);

}  // namespace
}  // namespace lmlab

BENCHMARK_MAIN();
