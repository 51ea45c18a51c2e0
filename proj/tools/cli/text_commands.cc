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

#include <set>
#include <sstream>

#include "commands.h"
#include "lmlab/embed.h"
#include "lmlab/error.h"
#include "lmlab/ngram.h"
#include "lmlab/rng.h"
#include "lmlab/sampling.h"

namespace lmlab::cli {
namespace {

struct CorpusOptions {
  std::string corpus;
  std::string tokenizer = "whitespace";
  std::size_t merges = 200;
  std::size_t max_vocab = 10000;

  void Register(CLI::App* cmd) {
    cmd->add_option("--corpus", corpus, "training text file")->required();
    cmd->add_option("--tokenizer", tokenizer, "whitespace | character | subword");
    cmd->add_option("--merges", merges, "subword merges to learn");
    cmd->add_option("--max-vocab", max_vocab, "vocabulary size cap, specials included");
  }
  TextData Load() const { return TokenizeCorpus(ReadFile(corpus), tokenizer, merges, max_vocab); }
};

void AddNgram(CLI::App& app, Io& io) {
  auto* cmd = app.add_subcommand("ngram", "Fit an add-k smoothed N-gram model");
  auto opts = std::make_shared<CorpusOptions>();
  opts->Register(cmd);
  auto order = std::make_shared<std::size_t>(2);
  auto k = std::make_shared<double>(1.0);
  auto eval = std::make_shared<std::string>();
  auto dump = std::make_shared<bool>(false);
  auto generate = std::make_shared<std::size_t>(0);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto temperature = std::make_shared<double>(1.0);
  cmd->add_option("--order", *order, "N (context of N-1 tokens)");
  cmd->add_option("--k", *k, "add-k smoothing constant, k >= 0");
  cmd->add_option("--eval", *eval, "held-out text file to score");
  cmd->add_flag("--dump", *dump, "print the count table");
  cmd->add_option("--generate", *generate, "sample this many tokens");
  cmd->add_option("--seed", *seed, "sampling seed");
  cmd->add_option("--temperature", *temperature, "sampling temperature");
  cmd->callback([=, &io] {
    const TextData d = opts->Load();
    const auto model = NGramModel::Fit(d.ids, *order, *k, d.vocab.size());
    io.out << "order=" << *order << " k=" << FormatDouble(*k) << " vocab=" << d.vocab.size()
           << " tokens=" << d.ids.size() << " contexts=" << model.counts().size() << "\n";
    if (*dump) io.out << model.Dump(&d.vocab);
    const auto train = Perplexity(model, d.ids);
    io.out << "train_cross_entropy_nats=" << FormatDouble(train.cross_entropy)
           << " train_perplexity=" << FormatDouble(train.perplexity) << "\n";
    if (!eval->empty()) {
      const auto r = Perplexity(model, d.tokenizer.Tokenize(ReadFile(*eval), d.vocab));
      io.out << "eval_cross_entropy_nats=" << FormatDouble(r.cross_entropy)
             << " eval_perplexity=" << FormatDouble(r.perplexity) << " eval_tokens=" << r.tokens
             << "\n";
    }
    if (*generate > 0) {
      Rng rng(DeriveSeed(*seed, "ngram/generate"));
      auto ids = Sample(model, {}, *temperature, *generate, rng);
      if (!ids.empty() && ids.back() == Vocab::kEos) ids.pop_back();
      io.out << d.tokenizer.Detokenize(ids, d.vocab) << "\n";
    }
  });
}

void AddEmbed(CLI::App& app, Io& io) {
  auto* cmd = app.add_subcommand("embed", "Co-occurrence counts, PCA embedding and analogies");
  auto opts = std::make_shared<CorpusOptions>();
  opts->Register(cmd);
  auto window = std::make_shared<std::size_t>(5);
  auto dim = std::make_shared<std::size_t>(16);
  auto ppmi = std::make_shared<bool>(false);
  auto analogies = std::make_shared<std::vector<std::string>>();
  auto vectors = std::make_shared<std::string>();
  cmd->add_option("--window", *window, "co-occurrence window N");
  cmd->add_option("--dim", *dim, "embedding dimension p");
  cmd->add_flag("--ppmi", *ppmi, "embed positive PMI instead of raw counts");
  cmd->add_option("--analogy", *analogies, "\"a b c\": find w maximising (a - b + c) . w");
  cmd->add_option("--vectors", *vectors, "write \"token v1 .. vp\" lines to this file");
  cmd->callback([=, &io] {
    const TextData d = opts->Load();
    const auto m = Cooccurrence(d.ids, *window, d.vocab.size());
    const Tensor matrix = m.ToTensor(*ppmi);
    const Embedding e = PcaEmbed(matrix, *dim);
    io.out << "vocab=" << d.vocab.size() << " dim=" << e.dim()
           << " reconstruction_error=" << FormatDouble(ReconstructionError(matrix, e)) << "\n";
    for (const auto& q : *analogies) {
      const auto words = Tokenizer::Whitespace().Split(q);
      if (words.size() != 3) {
        Fail(ErrorKind::kConfig, "--analogy needs three words, got '" + q + "'");
      }
      std::vector<TokenId> ids;
      for (const auto& w : words) {
        const auto id = d.vocab.Find(w);
        if (!id) Fail(ErrorKind::kData, "analogy word '" + w + "' is not in the vocabulary");
        ids.push_back(*id);
      }
      const std::set<TokenId> exclude{ids[0], ids[1], ids[2], Vocab::kBos, Vocab::kEos,
                                      Vocab::kUnk};
      const TokenId w = Analogy(e, ids[0], ids[1], ids[2], exclude);
      io.out << "analogy " << words[0] << " - " << words[1] << " + " << words[2] << " = "
             << d.vocab.Token(w) << "\n";
    }
    if (!vectors->empty()) {
      std::ostringstream s;
      s.precision(17);
      for (std::size_t w = 0; w < e.vocab_size(); ++w) {
        s << EscapeToken(d.vocab.Token(static_cast<TokenId>(w)));
        for (Real x : e.Of(static_cast<TokenId>(w))) s << ' ' << x;
        s << '\n';
      }
      WriteFile(*vectors, s.str());
    }
  });
}

}  // namespace

void AddTextCommands(CLI::App& app, Io& io) {
  AddNgram(app, io);
  AddEmbed(app, io);
}

}  // namespace lmlab::cli
