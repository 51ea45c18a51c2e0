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
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "commands.h"
#include "lmlab/error.h"
#include "lmlab/ngram.h"
#include "lmlab/rng.h"
#include "lmlab/sampling.h"
#include "lmlab/transformer.h"

namespace lmlab::cli {
namespace {

void WriteRunOutputs(const fs::path& dir, const RunRecord& record) {
  std::ostringstream metrics, timing, summary;
  WriteMetricsJsonl(metrics, record);
  WriteTimingJsonl(timing, record);
  WriteSummaryCsv(summary, record);
  WriteFile(dir / "metrics.jsonl", metrics.str());
  WriteFile(dir / "timing.jsonl", timing.str());
  WriteFile(dir / "summary.csv", summary.str());
}

Json Milestones(const RunRecord& record) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["threshold"] = 0.99;
  const auto train = record.FirstStepReaching("train", 0.99);
  const auto test = record.FirstStepReaching("test", 0.99);
  j["train_step"] = train ? Json(*train) : Json(nullptr);
  j["test_step"] = test ? Json(*test) : Json(nullptr);
  if (train && test) {
    j["step_gap"] = static_cast<long long>(*test) - static_cast<long long>(*train);
  } else {
    j["step_gap"] = nullptr;
  }
  return j;
}

std::string LastLoss(const RunRecord& record, const std::string& split) {
  for (auto it = record.evals.rbegin(); it != record.evals.rend(); ++it) {
    if (it->split == split) {
      std::string s = split + "_loss=" + FormatDouble(it->loss);
      if (it->accuracy) s += " " + split + "_accuracy=" + FormatDouble(*it->accuracy);
      return s;
    }
  }
  return split + "_loss=nan";
}

std::vector<TokenId> PromptIds(const LoadedRun& run, const std::string& prompt) {
  if (prompt.empty()) return {};
  if (run.spec.data == "corpus") return run.tokenizer.Tokenize(prompt, run.vocab);
  std::vector<TokenId> ids;
  for (const auto& t : Tokenizer::Whitespace().Split(prompt)) {
    const auto id = run.vocab.Find(t);
    if (!id) Fail(ErrorKind::kData, "prompt token '" + t + "' is not in the run's vocabulary");
    ids.push_back(*id);
  }
  return ids;
}

std::string Render(const LoadedRun& run, std::span<const TokenId> ids) {
  if (run.spec.data == "corpus") return run.tokenizer.Detokenize(ids, run.vocab);
  std::string s;
  for (TokenId id : ids) {
    if (!s.empty()) s += ' ';
    s += run.vocab.Token(id);
  }
  return s;
}

void AddTrain(CLI::App& app, Io& io) {
  auto* cmd = app.add_subcommand("train", "Train a neural language model into a run directory");
  auto config = std::make_shared<std::string>();
  auto sets = std::make_shared<std::vector<std::string>>();
  auto out = std::make_shared<std::string>();
  auto force = std::make_shared<bool>(false);
  auto seed = std::make_shared<std::uint64_t>(0);
  cmd->add_option("--config", *config, "key=value run config file");
  cmd->add_option("--set", *sets, "key=value override (repeatable, wins over --config)");
  cmd->add_option("--seed", *seed, "master seed (wins over both)");
  cmd->add_option("--out", *out, "run directory")->required();
  cmd->add_flag("--force", *force, "replace a non-empty run directory");
  cmd->callback([=, &io] {
    KeyValues kv = LoadConfig(*config, *sets);
    if (cmd->count("--seed") > 0) kv.Set("seed", std::to_string(*seed));
    const RunSpec spec = ResolveRun(kv);
    const fs::path dir = PrepareOutputDir(*out, *force);
    const TrainOutcome o = TrainRun(spec, dir);
    io.out << "params=" << o.params << " steps=" << o.record.steps_done << " "
           << LastLoss(o.record, "train") << " " << LastLoss(o.record, "test") << "\n";
    if (o.record.diverged) Fail(ErrorKind::kNumeric, o.record.divergence);
  });
}

void AddGenerate(CLI::App& app, Io& io) {
  auto* cmd = app.add_subcommand("generate", "Sample a continuation from a trained run");
  auto run_dir = std::make_shared<std::string>();
  auto prompt = std::make_shared<std::string>();
  auto max_new = std::make_shared<std::size_t>(50);
  auto temperature = std::make_shared<double>(1.0);
  auto greedy = std::make_shared<bool>(false);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto count = std::make_shared<std::size_t>(1);
  cmd->add_option("--run", *run_dir, "run directory written by train")->required();
  cmd->add_option("--prompt", *prompt, "text to continue");
  cmd->add_option("--max-new", *max_new, "tokens to generate (stops early at EOS)");
  cmd->add_option("--temperature", *temperature, "softmax temperature T > 0");
  cmd->add_flag("--greedy", *greedy, "always take the most likely token");
  cmd->add_option("--seed", *seed, "sampling seed");
  cmd->add_option("--count", *count, "number of samples");
  cmd->callback([=, &io] {
    const LoadedRun run = LoadRun(*run_dir);
    const auto ids = PromptIds(run, *prompt);
    Rng rng(DeriveSeed(*seed, "generate"));
    for (std::size_t i = 0; i < *count; ++i) {
      auto full = *greedy ? Greedy(*run.model, ids, *max_new)
                          : Sample(*run.model, ids, *temperature, *max_new, rng);
      if (!full.empty() && full.back() == Vocab::kEos) full.pop_back();
      io.out << Render(run, full) << "\n";
    }
  });
}

void AddPerplexity(CLI::App& app, Io& io) {
  auto* cmd = app.add_subcommand("perplexity", "Cross-entropy and perplexity of a corpus");
  auto corpus = std::make_shared<std::string>();
  auto run_dir = std::make_shared<std::string>();
  auto uniform = std::make_shared<bool>(false);
  auto vocab_size = std::make_shared<std::size_t>(0);
  auto ngram_train = std::make_shared<std::string>();
  auto order = std::make_shared<std::size_t>(2);
  auto k = std::make_shared<double>(1.0);
  auto tokenizer = std::make_shared<std::string>("whitespace");
  cmd->add_option("--corpus", *corpus, "text file to score")->required();
  auto* run_opt = cmd->add_option("--run", *run_dir, "score with a trained run");
  auto* uni_opt = cmd->add_flag("--uniform", *uniform, "score with the uniform model");
  cmd->add_option("--vocab-size", *vocab_size,
                  "uniform model size (default: distinct tokens in the corpus)");
  auto* ng_opt = cmd->add_option("--ngram-train", *ngram_train, "fit an N-gram on this file");
  cmd->add_option("--order", *order, "N-gram order N");
  cmd->add_option("--k", *k, "add-k smoothing");
  cmd->add_option("--tokenizer", *tokenizer, "whitespace | character (uniform and N-gram)");
  run_opt->excludes(uni_opt)->excludes(ng_opt);
  uni_opt->excludes(ng_opt);
  cmd->callback([=, &io] {
    const std::string text = ReadFile(*corpus);
    PerplexityResult r;
    if (!run_dir->empty()) {
      const LoadedRun run = LoadRun(*run_dir);
      const auto ids = run.spec.data == "corpus" ? run.tokenizer.Tokenize(text, run.vocab)
                                                 : PromptIds(run, text);
      r = Perplexity(*run.model, ids);
    } else if (*uniform) {
      const Tokenizer tok = ParseTokenizerMode(*tokenizer) == TokenizerMode::kCharacter
                                ? Tokenizer::Character()
                                : Tokenizer::Whitespace();
      const auto pieces = tok.Split(text);
      std::map<std::string, TokenId> ids_of;
      std::vector<TokenId> ids;
      for (const auto& p : pieces) {
        auto [it, fresh] = ids_of.emplace(p, static_cast<TokenId>(ids_of.size()));
        ids.push_back(it->second);
      }
      const std::size_t v = *vocab_size > 0 ? *vocab_size : ids_of.size();
      if (v < ids_of.size()) {
        Fail(ErrorKind::kConfig, "--vocab-size " + std::to_string(v) + " is smaller than the " +
                                     std::to_string(ids_of.size()) + " distinct corpus tokens");
      }
      r = Perplexity(UniformModel(v), ids);
    } else if (!ngram_train->empty()) {
      TextData train = TokenizeCorpus(ReadFile(*ngram_train), *tokenizer, 0, 1u << 30);
      const auto model = NGramModel::Fit(train.ids, *order, *k, train.vocab.size());
      r = Perplexity(model, train.tokenizer.Tokenize(text, train.vocab));
    } else {
      Fail(ErrorKind::kConfig, "perplexity needs one of --run, --uniform or --ngram-train");
    }
    io.out << "cross_entropy_nats=" << FormatDouble(r.cross_entropy)
           << " perplexity=" << FormatDouble(r.perplexity) << " tokens=" << r.tokens;
    if (r.zero_probability_position) {
      io.out << " zero_probability_position=" << *r.zero_probability_position;
    }
    io.out << "\n";
  });
}

}  // namespace

TrainOutcome TrainRun(const RunSpec& spec, const fs::path& dir) {
  WriteFile(dir / "config.txt", spec.text);
  const RunData data = LoadRunData(spec);
  WriteFile(dir / "vocab.txt", data.vocab.Serialize());
  if (data.tokenizer.mode() == TokenizerMode::kSubword) {
    WriteFile(dir / "merges.txt", data.tokenizer.SerializeMerges());
  }
  auto model = BuildModel(spec, data.vocab.size());
  TrainOutcome o;
  o.params = model->ParamCount();
  o.non_embedding_params = o.params;
  for (const auto& p : model->params()) {
    if (p.name == "embed" || p.name == "decoder") o.non_embedding_params -= p.value.size();
  }
  if (data.kind == "corpus" || data.kind == "grammar") {
    o.train_tokens = SplitStream(data.stream.size(), spec.train.eval_fraction).train_end;
    o.record = TrainOnStream(*model, data.stream, spec.train);
  } else {
    o.train_tokens = data.task.train.size();
    o.record = TrainOnTask(*model, data.task.train, data.task.test, spec.train);
    WriteJson(dir / "milestones.json", Milestones(o.record));
  }
  WriteRunOutputs(dir, o.record);
  SaveCheckpoint(*model, (dir / "checkpoint.tlmc").string());
  return o;
}

void AddTrainCommands(CLI::App& app, Io& io) {
  AddTrain(app, io);
  AddGenerate(app, io);
  AddPerplexity(app, io);
}

}  // namespace lmlab::cli
