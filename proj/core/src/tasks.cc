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

#include "lmlab/tasks.h"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace lmlab {
namespace {

template <typename T>
void Shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.Index(i)]);
}

}  // namespace

TaskExample ModularAddExample(const Vocab& vocab, std::size_t a, std::size_t b,
                              std::size_t modulus) {
  TaskExample ex;
  ex.prompt = {vocab.Id(std::to_string(a)), vocab.Id("+"), vocab.Id(std::to_string(b)),
               vocab.Id("=")};
  ex.answer = vocab.Id(std::to_string((a + b) % modulus));
  return ex;
}

TaskDataset MakeModularAdd(const ModularAddConfig& config, Rng& rng) {
  const std::size_t m = config.modulus;
  if (m < 2) Fail(ErrorKind::kConfig, "modular_add: modulus must be >= 2, got " + std::to_string(m));
  if (!(config.train_fraction > 0 && config.train_fraction <= 1)) {
    Fail(ErrorKind::kConfig, "modular_add: train_fraction must lie in (0, 1]");
  }
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < m; ++i) tokens.push_back(std::to_string(i));
  tokens.emplace_back("+");
  tokens.emplace_back("=");
  TaskDataset ds;
  ds.vocab = Vocab::FromTokens(tokens);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (config.samples == 0) {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) pairs.emplace_back(a, b);
    }
    Shuffle(pairs, rng);
  } else {
    for (std::size_t s = 0; s < config.samples; ++s) {
      const std::size_t a = rng.Index(m);
      pairs.emplace_back(a, rng.Index(m));
    }
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(config.train_fraction * static_cast<double>(pairs.size())));
  if (n_train == 0) Fail(ErrorKind::kConfig, "modular_add: training split is empty");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto ex = ModularAddExample(ds.vocab, pairs[i].first, pairs[i].second, m);
    (i < n_train ? ds.train : ds.test).push_back(std::move(ex));
  }
  return ds;
}

TaskExample InductionExample(const InductionConfig& config, TokenId a, TokenId b,
                             std::span<const TokenId> content, Rng& rng) {
  const std::size_t len = config.length;
  std::vector<TokenId> filler;
  for (TokenId t : content) {
    if (t != a && t != b) filler.push_back(t);
  }
  TaskExample ex;
  ex.prompt.resize(len);
  for (auto& t : ex.prompt) t = filler[rng.Index(filler.size())];
  const std::size_t pos = rng.Index(len - 2);
  ex.prompt[pos] = a;
  ex.prompt[pos + 1] = b;
  ex.prompt[len - 1] = a;
  ex.answer = b;
  return ex;
}

InductionDataset MakeInduction(const InductionConfig& config, Rng& rng) {
  const std::size_t k = config.content_tokens;
  if (k < 3) Fail(ErrorKind::kConfig, "induction: need at least 3 content tokens");
  if (config.length < 3) Fail(ErrorKind::kConfig, "induction: prompt length must be >= 3");
  if (!(config.heldout_fraction > 0 && config.heldout_fraction < 1)) {
    Fail(ErrorKind::kConfig, "induction: heldout_fraction must lie in (0, 1)");
  }
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < k; ++i) tokens.push_back("t" + std::to_string(i));
  InductionDataset ds;
  ds.vocab = Vocab::FromTokens(tokens);
  std::vector<TokenId> content;
  for (const auto& t : tokens) content.push_back(ds.vocab.Id(t));

  std::vector<std::pair<TokenId, TokenId>> pairs;
  for (TokenId a : content) {
    for (TokenId b : content) {
      if (a != b) pairs.emplace_back(a, b);
    }
  }
  Shuffle(pairs, rng);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(config.heldout_fraction * static_cast<double>(pairs.size()))));
  ds.test_pairs.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_test));
  ds.train_pairs.assign(pairs.begin() + static_cast<std::ptrdiff_t>(n_test), pairs.end());
  for (std::size_t i = 0; i < config.train_examples; ++i) {
    const auto& [a, b] = ds.train_pairs[rng.Index(ds.train_pairs.size())];
    ds.train.push_back(InductionExample(config, a, b, content, rng));
  }
  for (std::size_t i = 0; i < config.test_examples; ++i) {
    const auto& [a, b] = ds.test_pairs[rng.Index(ds.test_pairs.size())];
    ds.test.push_back(InductionExample(config, a, b, content, rng));
  }
  return ds;
}

void WriteTaskJsonl(std::ostream& out, std::span<const TaskExample> examples) {
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["prompt"] = ex.prompt;
    j["answer"] = ex.answer;
    out << j.dump() << "\n";
  }
}

std::vector<TaskExample> ReadTaskJsonl(std::istream& in) {
  std::vector<TaskExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TaskExample ex;
      ex.prompt = j.at("prompt").get<std::vector<TokenId>>();
      ex.answer = j.at("answer").get<TokenId>();
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kData, "task dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

GrammarCorpus MakeGrammarCorpus(const Grammar& g, std::size_t min_tokens, Rng& rng,
                                std::size_t max_expansions) {
  GrammarCorpus corpus;
  std::vector<std::string> names;
  for (SymbolId t : g.Terminals()) names.push_back(g.name(t));
  corpus.vocab = Vocab::FromTokens(names);
  while (corpus.stream.size() < min_tokens) {
    Generated gen = Generate(g, rng, max_expansions);
    corpus.restarts += gen.restarts;
    std::vector<TokenId> ids;
    for (SymbolId t : gen.tokens) ids.push_back(corpus.vocab.Id(g.name(t)));
    corpus.stream.insert(corpus.stream.end(), ids.begin(), ids.end());
    corpus.stream.push_back(Vocab::kEos);
    corpus.strings.push_back(std::move(ids));
    corpus.trees.push_back(std::move(gen.tree));
  }
  return corpus;
}

}  // namespace lmlab
