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

#include "common.h"

#include <fstream>
#include <set>
#include <sstream>

#include "lmlab/error.h"
#include "lmlab/rng.h"

namespace lmlab::cli {
namespace {

const std::set<std::string> kCommonKeys = {"seed", "data", "model"};
const std::set<std::string> kCorpusKeys = {"corpus", "tokenizer", "merges", "max_vocab"};
const std::set<std::string> kGrammarKeys = {"grammar", "grammar_tokens", "max_expansions"};
const std::set<std::string> kModularKeys = {"modulus", "train_fraction"};
const std::set<std::string> kInductionKeys = {"content_tokens", "length", "heldout_fraction",
                                              "train_examples", "test_examples"};
const std::set<std::string> kTransformerKeys = {
    "dim",        "pos_dim",      "window",         "layers", "heads",
    "hidden",     "residual",     "layer_norm",     "tied_decoder",
    "dense_bilinear", "causal",   "additive_positions", "out_proj"};
const std::set<std::string> kRnnKeys = {"dim", "state", "recent", "hidden", "window"};
const std::set<std::string> kFfnKeys = {"dim", "context", "hidden"};

const std::set<std::string>& DataKeys(const std::string& data) {
  if (data == "corpus") return kCorpusKeys;
  if (data == "grammar") return kGrammarKeys;
  if (data == "modular_add") return kModularKeys;
  if (data == "induction") return kInductionKeys;
  Fail(ErrorKind::kConfig, "data must be corpus, grammar, modular_add or induction, got '" +
                               data + "'");
}

const std::set<std::string>& ModelKeys(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransformer:
      return kTransformerKeys;
    case ModelKind::kRnn:
      return kRnnKeys;
    case ModelKind::kFfnLm:
      return kFfnKeys;
  }
  return kTransformerKeys;
}

std::string ModelText(const KeyValues& kv, ModelKind kind, std::size_t vocab_size) {
  std::string text = "vocab_size=" + std::to_string(vocab_size) + "\n";
  for (const auto& [k, v] : kv.values()) {
    if (ModelKeys(kind).contains(k)) text += k + "=" + v + "\n";
  }
  return text;
}

// Drops the "key=..." line from canonical text.
std::string WithoutKey(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
}

void WriteJson(const fs::path& path, const Json& j) { WriteFile(path, j.dump(2) + "\n"); }

fs::path PrepareOutputDir(const std::string& path, bool force) {
  if (path.empty()) Fail(ErrorKind::kConfig, "an output directory (--out) is required");
  const fs::path dir(path);
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) {
      Fail(ErrorKind::kIo, "output path '" + path + "' exists and is not a directory");
    }
    if (!fs::is_empty(dir, ec)) {
      if (!force) {
        Fail(ErrorKind::kConfig,
             "output directory '" + path + "' is not empty (use --force to replace it)");
      }
      fs::remove_all(dir, ec);
      if (ec) Fail(ErrorKind::kIo, "cannot clear '" + path + "': " + ec.message());
    }
  }
  fs::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create '" + path + "': " + ec.message());
  return dir;
}

KeyValues LoadConfig(const std::string& path, const std::vector<std::string>& overrides) {
  KeyValues kv = path.empty() ? KeyValues{} : KeyValues::Parse(ReadFile(path));
  std::string text;
  for (const auto& o : overrides) text += o + "\n";
  kv.Overlay(KeyValues::Parse(text));
  return kv;
}

std::vector<std::string> SplitList(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> TokenStrings(const std::string& text, const Tokenizer& tok) {
  return tok.Split(text);
}

TextData TokenizeCorpus(const std::string& text, const std::string& mode, std::size_t merges,
                        std::size_t max_vocab) {
  TextData d;
  switch (ParseTokenizerMode(mode)) {
    case TokenizerMode::kWhitespace:
      d.tokenizer = Tokenizer::Whitespace();
      break;
    case TokenizerMode::kCharacter:
      d.tokenizer = Tokenizer::Character();
      break;
    case TokenizerMode::kSubword:
      d.tokenizer = LearnSubwordMerges(text, merges);
      break;
  }
  std::vector<std::string> pieces = d.tokenizer.Split(text);
  if (d.tokenizer.mode() == TokenizerMode::kSubword) {
    // Every character form stays in the vocabulary so unseen words still tokenize.
    auto inventory = d.tokenizer.PieceInventory(text);
    pieces.insert(pieces.end(), inventory.begin(), inventory.end());
  }
  d.vocab = Vocab::Build(pieces, max_vocab);
  d.ids = d.tokenizer.Tokenize(text, d.vocab);
  return d;
}

RunSpec ResolveRun(const KeyValues& kv) {
  RunSpec spec;
  spec.seed = kv.GetUInt("seed", 1);
  spec.data = kv.GetString("data", "corpus");
  spec.model = ParseModelKind(kv.GetString("model", "transformer"));
  std::set<std::string> allowed = kCommonKeys;
  for (const auto& k : DataKeys(spec.data)) allowed.insert(k);
  for (const auto& k : ModelKeys(spec.model)) allowed.insert(k);
  for (const auto& k : TrainConfig::Keys()) {
    if (k != "seed") allowed.insert(k);
  }
  kv.RejectUnknown(allowed, "run config (data=" + spec.data + ", model=" +
                                std::string(ModelKindName(spec.model)) + ")");
  spec.kv = kv;
  spec.train = TrainConfig::FromKeyValues(kv);
  spec.train.seed = DeriveSeed(spec.seed, "train");

  std::string& t = spec.text;
  t = "# lmlab run config, format_version=" + std::to_string(kFormatVersion) + "\n";
  t += "seed=" + std::to_string(spec.seed) + "\n";
  t += "data=" + spec.data + "\n";
  if (spec.data == "corpus") {
    t += "corpus=" + kv.GetString("corpus", "") + "\n";
    t += "tokenizer=" + kv.GetString("tokenizer", "whitespace") + "\n";
    t += "merges=" + std::to_string(kv.GetUInt("merges", 200)) + "\n";
    t += "max_vocab=" + std::to_string(kv.GetUInt("max_vocab", 10000)) + "\n";
  } else if (spec.data == "grammar") {
    t += "grammar=" + kv.GetString("grammar", "fig3_pcfg") + "\n";
    t += "grammar_tokens=" + std::to_string(kv.GetUInt("grammar_tokens", 100000)) + "\n";
    t += "max_expansions=" + std::to_string(kv.GetUInt("max_expansions", 10000)) + "\n";
  } else if (spec.data == "modular_add") {
    t += "modulus=" + std::to_string(kv.GetUInt("modulus", 97)) + "\n";
    t += "train_fraction=" + FormatDouble(kv.GetDouble("train_fraction", 0.5)) + "\n";
  } else {
    const InductionConfig d;
    t += "content_tokens=" + std::to_string(kv.GetUInt("content_tokens", d.content_tokens)) + "\n";
    t += "length=" + std::to_string(kv.GetUInt("length", d.length)) + "\n";
    t += "heldout_fraction=" +
         FormatDouble(kv.GetDouble("heldout_fraction", d.heldout_fraction)) + "\n";
    t += "train_examples=" + std::to_string(kv.GetUInt("train_examples", d.train_examples)) + "\n";
    t += "test_examples=" + std::to_string(kv.GetUInt("test_examples", d.test_examples)) + "\n";
  }
  t += "model=" + std::string(ModelKindName(spec.model)) + "\n";
  const auto probe = MakeModel(spec.model, ModelText(kv, spec.model, 1));
  t += WithoutKey(probe->ConfigText(), "vocab_size");
  t += WithoutKey(spec.train.ToText(), "seed");
  if (spec.data == "corpus" && kv.GetString("corpus", "").empty()) {
    Fail(ErrorKind::kConfig, "data=corpus needs corpus=<path>");
  }
  return spec;
}

RunData LoadRunData(const RunSpec& spec) {
  const KeyValues kv = KeyValues::Parse(spec.text);
  RunData d;
  d.kind = spec.data;
  Rng rng(DeriveSeed(spec.seed, "data"));
  if (d.kind == "corpus") {
    TextData t = TokenizeCorpus(ReadFile(kv.GetString("corpus", "")),
                                kv.GetString("tokenizer", "whitespace"), kv.GetUInt("merges", 0),
                                kv.GetUInt("max_vocab", 0));
    d.tokenizer = std::move(t.tokenizer);
    d.vocab = std::move(t.vocab);
    d.stream = std::move(t.ids);
  } else if (d.kind == "grammar") {
    d.grammar = Grammar::Load(kv.GetString("grammar", ""));
    if (!d.grammar->probabilistic()) *d.grammar = d.grammar->WithUniformProbabilities();
    d.grammar_corpus = MakeGrammarCorpus(*d.grammar, kv.GetUInt("grammar_tokens", 0), rng,
                                         kv.GetUInt("max_expansions", 10000));
    d.vocab = d.grammar_corpus.vocab;
    d.stream = d.grammar_corpus.stream;
  } else if (d.kind == "modular_add") {
    ModularAddConfig c;
    c.modulus = kv.GetUInt("modulus", c.modulus);
    c.train_fraction = kv.GetDouble("train_fraction", c.train_fraction);
    d.task = MakeModularAdd(c, rng);
    d.vocab = d.task.vocab;
  } else {
    InductionConfig c;
    c.content_tokens = kv.GetUInt("content_tokens", c.content_tokens);
    c.length = kv.GetUInt("length", c.length);
    c.heldout_fraction = kv.GetDouble("heldout_fraction", c.heldout_fraction);
    c.train_examples = kv.GetUInt("train_examples", c.train_examples);
    c.test_examples = kv.GetUInt("test_examples", c.test_examples);
    d.task = MakeInduction(c, rng);
    d.vocab = d.task.vocab;
  }
  return d;
}

std::unique_ptr<NeuralModel> BuildModel(const RunSpec& spec, std::size_t vocab_size) {
  auto model = MakeModel(spec.model, ModelText(spec.kv, spec.model, vocab_size));
  InitModel(*model, DeriveSeed(spec.seed, "init"));
  return model;
}

LoadedRun LoadRun(const std::string& dir) {
  const fs::path root(dir);
  LoadedRun run;
  run.spec = ResolveRun(KeyValues::Parse(ReadFile(root / "config.txt")));
  run.vocab = Vocab::Parse(ReadFile(root / "vocab.txt"));
  if (run.spec.data == "corpus") {
    const std::string mode = run.spec.kv.GetString("tokenizer", "whitespace");
    if (mode == "subword") {
      run.tokenizer = Tokenizer::Subword(Tokenizer::ParseMerges(ReadFile(root / "merges.txt")));
    } else if (mode == "character") {
      run.tokenizer = Tokenizer::Character();
    }
  }
  run.model = LoadCheckpoint((root / "checkpoint.tlmc").string());
  return run;
}

}  // namespace lmlab::cli
