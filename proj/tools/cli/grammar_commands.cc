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

#include <cmath>
#include <sstream>

#include "commands.h"
#include "lmlab/cnf.h"
#include "lmlab/error.h"
#include "lmlab/parse.h"
#include "lmlab/rng.h"

namespace lmlab::cli {
namespace {

struct GrammarOptions {
  std::string name;
  bool uniform = false;

  void Register(CLI::App* cmd, const std::string& fallback) {
    name = fallback;
    cmd->add_option("--grammar", name, "builtin name (fig3, fig3_pcfg, toy_ss, toy_ab, "
                                       "toy_paren) or grammar file");
    cmd->add_flag("--uniform", uniform, "give each lhs's rules equal probability");
  }
  Grammar Load(bool need_probabilities) const {
    Grammar g = Grammar::Load(name);
    if (uniform) return g.WithUniformProbabilities();
    if (need_probabilities && !g.probabilistic()) {
      Fail(ErrorKind::kConfig, "grammar '" + name + "' has no rule probabilities (add --uniform)");
    }
    return g;
  }
};

std::vector<std::string> Inputs(const std::vector<std::string>& inputs, const std::string& file) {
  std::vector<std::string> all = inputs;
  if (!file.empty()) {
    std::istringstream in(ReadFile(file));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) all.push_back(line);
    }
  }
  if (all.empty()) Fail(ErrorKind::kConfig, "give --input or --file");
  return all;
}

void AddGrammar(CLI::App& app, Io& io) {
  auto* grammar = app.add_subcommand("grammar", "Generate, parse and score with a CFG or PCFG");
  grammar->require_subcommand(1);

  {
    auto* cmd = grammar->add_subcommand("gen", "Sample strings by leftmost derivation");
    auto g = std::make_shared<GrammarOptions>();
    g->Register(cmd, "fig3_pcfg");
    auto count = std::make_shared<std::size_t>(10);
    auto max_exp = std::make_shared<std::size_t>(10000);
    auto trees = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--count", *count, "strings to generate");
    cmd->add_option("--max-expansions", *max_exp, "restart a derivation after this many steps");
    cmd->add_flag("--trees", *trees, "print the derivation tree after each string");
    cmd->add_option("--seed", *seed, "seed");
    cmd->callback([=, &io] {
      const Grammar gr = g->Load(true);
      Rng rng(DeriveSeed(*seed, "grammar/gen"));
      std::size_t restarts = 0;
      for (std::size_t i = 0; i < *count; ++i) {
        auto gen = Generate(gr, rng, *max_exp);
        restarts += gen.restarts;
        io.out << gr.Join(gen.tokens) << "\n";
        if (*trees) io.out << "  " << TreeToString(gr, gen.tree) << "\n";
      }
      io.err << "restarts=" << restarts << "\n";
    });
  }
  {
    auto* cmd = grammar->add_subcommand("parse", "Most probable parse tree (CYK)");
    auto g = std::make_shared<GrammarOptions>();
    g->Register(cmd, "fig3");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto file = std::make_shared<std::string>();
    cmd->add_option("--input", *inputs, "space-separated terminals (repeatable)");
    cmd->add_option("--file", *file, "one string per line");
    cmd->callback([=, &io] {
      const Grammar gr = g->Load(false);
      const CnfGrammar cnf = ToCnf(gr);
      for (const auto& line : Inputs(*inputs, *file)) {
        const auto tree = ParseBest(cnf, gr.Tokenize(line));
        if (!tree) {
          io.out << "no parse\n";
          continue;
        }
        io.out << TreeToString(gr, *tree);
        if (gr.probabilistic()) io.out << "  log_prob=" << FormatDouble(TreeLogProb(gr, *tree));
        io.out << "\n";
      }
    });
  }
  {
    auto* cmd = grammar->add_subcommand("inside", "Total string probability (inside algorithm)");
    auto g = std::make_shared<GrammarOptions>();
    g->Register(cmd, "fig3_pcfg");
    auto inputs = std::make_shared<std::vector<std::string>>();
    auto file = std::make_shared<std::string>();
    cmd->add_option("--input", *inputs, "space-separated terminals (repeatable)");
    cmd->add_option("--file", *file, "one string per line");
    cmd->callback([=, &io] {
      const Grammar gr = g->Load(true);
      const CnfGrammar cnf = ToCnf(gr);
      for (const auto& line : Inputs(*inputs, *file)) {
        const double lp = InsideLogProb(cnf.grammar, cnf.MapTokens(gr.Tokenize(line)));
        io.out << "log_prob=" << FormatDouble(lp) << " prob=" << FormatDouble(std::exp(lp))
               << "\n";
      }
    });
  }
  {
    auto* cmd = grammar->add_subcommand("entropy", "Monte Carlo entropy rate of the grammar");
    auto g = std::make_shared<GrammarOptions>();
    g->Register(cmd, "fig3_pcfg");
    auto samples = std::make_shared<std::size_t>(10000);
    auto separator = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--samples", *samples, "strings to sample");
    cmd->add_flag("--count-separator", *separator, "count one EOS per string");
    cmd->add_option("--seed", *seed, "seed");
    cmd->callback([=, &io] {
      Rng rng(DeriveSeed(*seed, "grammar/entropy"));
      const auto e = GrammarEntropyFloor(g->Load(true), *samples, rng, *separator);
      Json j;
      j["format_version"] = kFormatVersion;
      j["nats_per_token"] = e.nats_per_token;
      j["standard_error"] = e.standard_error;
      j["samples"] = e.samples;
      j["mean_length"] = e.mean_length;
      j["restarts"] = e.restarts;
      io.out << j.dump() << "\n";
    });
  }
  {
    auto* cmd = grammar->add_subcommand("cnf", "Print the Chomsky normal form");
    auto g = std::make_shared<GrammarOptions>();
    g->Register(cmd, "fig3");
    cmd->callback([=, &io] { io.out << ToCnf(g->Load(false)).grammar.ToText(); });
  }
}

void WriteTask(const fs::path& dir, const TaskDataset& data, const std::string& config) {
  WriteFile(dir / "config.txt", config);
  WriteFile(dir / "vocab.txt", data.vocab.Serialize());
  std::ostringstream train, test;
  WriteTaskJsonl(train, data.train);
  WriteTaskJsonl(test, data.test);
  WriteFile(dir / "train.jsonl", train.str());
  WriteFile(dir / "test.jsonl", test.str());
}

void AddTask(CLI::App& app, Io& io) {
  auto* task = app.add_subcommand("task", "Emit a synthetic task dataset");
  task->require_subcommand(1);
  {
    auto* cmd = task->add_subcommand("modular_add", "a + b = (a + b) mod m");
    auto c = std::make_shared<ModularAddConfig>();
    auto out = std::make_shared<std::string>();
    auto force = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--modulus", c->modulus, "m");
    cmd->add_option("--train-fraction", c->train_fraction, "fraction of pairs for training");
    cmd->add_option("--samples", c->samples, "sampled pairs, 0 for the full table");
    cmd->add_option("--seed", *seed, "seed");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--force", *force, "replace a non-empty directory");
    cmd->callback([=, &io] {
      Rng rng(DeriveSeed(*seed, "data"));
      const auto data = MakeModularAdd(*c, rng);
      const std::string config = "task=modular_add\nseed=" + std::to_string(*seed) +
                                 "\nmodulus=" + std::to_string(c->modulus) +
                                 "\ntrain_fraction=" + FormatDouble(c->train_fraction) +
                                 "\nsamples=" + std::to_string(c->samples) + "\n";
      WriteTask(PrepareOutputDir(*out, *force), data, config);
      io.out << "train=" << data.train.size() << " test=" << data.test.size()
             << " vocab=" << data.vocab.size() << "\n";
    });
  }
  {
    auto* cmd = task->add_subcommand("induction", "... A B ... A -> B");
    auto c = std::make_shared<InductionConfig>();
    auto out = std::make_shared<std::string>();
    auto force = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(1);
    cmd->add_option("--content-tokens", c->content_tokens, "alphabet size");
    cmd->add_option("--length", c->length, "prompt length");
    cmd->add_option("--heldout-fraction", c->heldout_fraction, "fraction of (A, B) pairs held out");
    cmd->add_option("--train-examples", c->train_examples, "training sequences");
    cmd->add_option("--test-examples", c->test_examples, "held-out sequences");
    cmd->add_option("--seed", *seed, "seed");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_flag("--force", *force, "replace a non-empty directory");
    cmd->callback([=, &io] {
      Rng rng(DeriveSeed(*seed, "data"));
      const auto data = MakeInduction(*c, rng);
      const std::string config =
          "task=induction\nseed=" + std::to_string(*seed) +
          "\ncontent_tokens=" + std::to_string(c->content_tokens) +
          "\nlength=" + std::to_string(c->length) +
          "\nheldout_fraction=" + FormatDouble(c->heldout_fraction) +
          "\ntrain_examples=" + std::to_string(c->train_examples) +
          "\ntest_examples=" + std::to_string(c->test_examples) + "\n";
      WriteTask(PrepareOutputDir(*out, *force), data, config);
      io.out << "train=" << data.train.size() << " test=" << data.test.size()
             << " vocab=" << data.vocab.size() << " train_pairs=" << data.train_pairs.size()
             << " test_pairs=" << data.test_pairs.size() << "\n";
    });
  }
}

}  // namespace

void AddGrammarCommands(CLI::App& app, Io& io) {
  AddGrammar(app, io);
  AddTask(app, io);
}

}  // namespace lmlab::cli
