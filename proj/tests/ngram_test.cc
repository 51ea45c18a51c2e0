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
#include <map>
#include <vector>

#include "lmlab/language_model.h"
#include "lmlab/ngram.h"
#include "lmlab/rng.h"

namespace lmlab {
namespace {

constexpr TokenId kA = 3, kB = 4;
constexpr std::size_t kV = 5;

TEST(NGram, BigramHandCount) {
  std::vector<TokenId> ids{kA, kB, kA, kB, kA};
  auto m = NGramModel::Fit(ids, 2, 0, kV);
  std::vector<TokenId> ca{kA}, cb{kB};
  EXPECT_DOUBLE_EQ(*m.CondProb(ca, kB), 1.0);
  EXPECT_DOUBLE_EQ(*m.CondProb(cb, kA), 1.0);
  EXPECT_EQ(m.Count(ca, kB), 2u);
  EXPECT_EQ(m.ContextTotal(cb), 2u);
}

TEST(NGram, UnigramFrequencies) {
  std::vector<TokenId> ids{kA, kA, kB};
  auto m = NGramModel::Fit(ids, 1, 0, kV);
  EXPECT_NEAR(*m.CondProb({}, kA), 2.0 / 3, 1e-15);
  EXPECT_NEAR(*m.CondProb({}, kB), 1.0 / 3, 1e-15);
}

TEST(NGram, SmoothedUnseenContextIsUniform) {
  std::vector<TokenId> ids{kA, kB, kA};
  auto m = NGramModel::Fit(ids, 2, 1, kV);
  std::vector<TokenId> unseen{2};
  for (TokenId w = 0; w < static_cast<TokenId>(kV); ++w) {
    EXPECT_NEAR(*m.CondProb(unseen, w), 1.0 / kV, 1e-15);
  }
}

TEST(NGram, UnseenContextWithoutSmoothingIsUndefined) {
  std::vector<TokenId> ids{kA, kB, kA};
  auto m = NGramModel::Fit(ids, 2, 0, kV);
  std::vector<TokenId> unseen{2};
  EXPECT_FALSE(m.CondProb(unseen, kA).has_value());
}

TEST(NGram, TooShortIsError) {
  std::vector<TokenId> ids{kA};
  EXPECT_THROW(NGramModel::Fit(ids, 3, 0, kV), Error);
}

TEST(NGram, DistributionsSumToOne) {
  Rng rng(3);
  std::vector<TokenId> ids(200);
  for (auto& t : ids) t = static_cast<TokenId>(3 + rng.Index(4));
  for (std::size_t n : {1, 2, 3}) {
    auto m = NGramModel::Fit(ids, n, 0.5, 7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<TokenId> ctx(rng.Index(4));
      for (auto& t : ctx) t = static_cast<TokenId>(rng.Index(7));
      double s = 0;
      for (TokenId w = 0; w < 7; ++w) s += *m.CondProb(ctx, w);
      EXPECT_NEAR(s, 1, 1e-12);
    }
    for (const auto& [ctx, c] : m.counts()) {
      std::uint64_t sum = 0;
      for (const auto& [w, k] : c.next) sum += k;
      EXPECT_EQ(sum, c.total);
    }
  }
}

TEST(NGram, CountsMatchBruteForce) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(100 + trial);
    const std::size_t n = 1 + rng.Index(4);
    std::vector<TokenId> ids(n + rng.Index(30));
    for (auto& t : ids) t = static_cast<TokenId>(3 + rng.Index(3));
    auto m = NGramModel::Fit(ids, n, 0, 6);
    std::map<std::vector<TokenId>, std::uint64_t> oracle;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::vector<TokenId> key;
      for (std::size_t back = n - 1; back >= 1; --back) {
        key.push_back(i >= back ? ids[i - back] : Vocab::kBos);
      }
      key.push_back(ids[i]);
      ++oracle[key];
    }
    std::uint64_t total = 0;
    for (const auto& [ctx, c] : m.counts()) {
      for (const auto& [w, k] : c.next) {
        auto key = ctx;
        key.push_back(w);
        EXPECT_EQ(oracle[key], k);
        total += k;
      }
    }
    EXPECT_EQ(total, ids.size());
  }
}

TEST(NGram, SmoothingMonotone) {
  std::vector<TokenId> ids{kA, kB, kA, kB, kA, kA};
  std::vector<TokenId> ctx{kA};
  double prev = 2;
  for (double k : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    double p = *NGramModel::Fit(ids, 2, k, kV).CondProb(ctx, kB);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Perplexity, UniformModel) {
  UniformModel u(16);
  std::vector<TokenId> ids{3, 7, 9, 15, 0};
  auto r = Perplexity(u, ids);
  EXPECT_NEAR(r.cross_entropy, std::log(16.0), 1e-12);
  EXPECT_NEAR(r.perplexity, 16, 1e-9);
}

TEST(Perplexity, PeriodicCorpusIsOne) {
  std::vector<TokenId> ids;
  for (int i = 0; i < 20; ++i) ids.push_back(i % 2 ? kB : kA);
  auto m = NGramModel::Fit(ids, 2, 0, kV);
  EXPECT_NEAR(Perplexity(m, ids).perplexity, 1.0, 1e-12);
}

TEST(Perplexity, BigramHandCount) {
  // Contexts BOS->a (1/1), a->b (2/2), b->a (2/2): every factor is 1.
  std::vector<TokenId> ids{kA, kB, kA, kB, kA};
  auto m = NGramModel::Fit(ids, 2, 0, kV);
  EXPECT_NEAR(Perplexity(m, ids).cross_entropy, 0, 1e-15);
  // "a a b": BOS->a 1, a->a 1/2, a->b 1/2.
  std::vector<TokenId> ids2{kA, kA, kB};
  auto m2 = NGramModel::Fit(ids2, 2, 0, kV);
  EXPECT_NEAR(Perplexity(m2, ids2).cross_entropy, -(2 * std::log(0.5)) / 3, 1e-15);
}

TEST(Perplexity, ZeroProbabilityReportsPosition) {
  std::vector<TokenId> train{kA, kB, kA, kB};
  auto m = NGramModel::Fit(train, 2, 0, kV);
  std::vector<TokenId> test{kA, kB, kB};
  auto r = Perplexity(m, test);
  EXPECT_TRUE(std::isinf(r.cross_entropy));
  ASSERT_TRUE(r.zero_probability_position.has_value());
  EXPECT_EQ(*r.zero_probability_position, 2u);
}

TEST(Perplexity, MaximumLikelihoodIsOptimal) {
  Rng rng(11);
  std::vector<TokenId> ids(300);
  for (auto& t : ids) t = static_cast<TokenId>(3 + rng.Index(3));
  auto fitted = NGramModel::Fit(ids, 2, 0, 6);
  const double best = Perplexity(fitted, ids).cross_entropy;
  // Perturbed models: same order, fit to perturbed copies with smoothing.
  for (int trial = 0; trial < 30; ++trial) {
    auto other_ids = ids;
    for (int j = 0; j < 20; ++j) other_ids[rng.Index(ids.size())] = static_cast<TokenId>(3 + rng.Index(3));
    auto other = NGramModel::Fit(other_ids, 2, rng.Uniform(), 6);
    EXPECT_LE(best, Perplexity(other, ids).cross_entropy + 1e-12);
  }
}

TEST(NGram, DumpIsSortedTabSeparated) {
  std::vector<TokenId> ids{kA, kB, kA};
  std::string dump = NGramModel::Fit(ids, 2, 0, kV).Dump();
  EXPECT_NE(dump.find("3\t4\t1"), std::string::npos) << dump;
  EXPECT_NE(dump.find("0\t3\t1"), std::string::npos) << dump;
}

}  // namespace
}  // namespace lmlab
