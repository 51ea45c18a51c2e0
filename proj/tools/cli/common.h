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

#ifndef LMLAB_TOOLS_CLI_COMMON_H_
#define LMLAB_TOOLS_CLI_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmlab/config_text.h"
#include "lmlab/grammar.h"
#include "lmlab/model.h"
#include "lmlab/tasks.h"
#include "lmlab/text.h"
#include "lmlab/train.h"

namespace lmlab::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

struct Io {
  std::ostream& out;
  std::ostream& err;
};

std::string ReadFile(const fs::path& path);
void WriteFile(const fs::path& path, const std::string& content);
void WriteJson(const fs::path& path, const Json& j);

// Creates an empty output directory. An existing non-empty directory is a
// config error unless `force`, which clears it first.
fs::path PrepareOutputDir(const std::string& path, bool force);

// Config file (if any) with each "key=value" override applied on top.
KeyValues LoadConfig(const std::string& path, const std::vector<std::string>& overrides);

std::vector<std::string> SplitList(const std::string& text, char sep = ',');

// Plain-text corpus tokenized under the "tokenizer", "merges" and
// "max_vocab" keys.
struct TextData {
  Tokenizer tokenizer = Tokenizer::Whitespace();
  Vocab vocab;
  std::vector<TokenId> ids;
};

TextData TokenizeCorpus(const std::string& text, const std::string& mode, std::size_t merges,
                        std::size_t max_vocab);
std::vector<std::string> TokenStrings(const std::string& text, const Tokenizer& tok);

// Everything a training run consumes, rebuilt deterministically from its
// effective config and seed.
struct RunData {
  std::string kind;  // corpus | grammar | modular_add | induction
  Tokenizer tokenizer = Tokenizer::Whitespace();
  Vocab vocab;
  std::vector<TokenId> stream;  // corpus and grammar
  TaskDataset task;             // modular_add and induction
  std::optional<Grammar> grammar;
  GrammarCorpus grammar_corpus;
};

// A resolved training run: data keys, model keys and training keys, with
// every default filled in. `text` is the canonical echo.
struct RunSpec {
  KeyValues kv;
  std::uint64_t seed = 1;
  std::string data;
  ModelKind model = ModelKind::kTransformer;
  TrainConfig train;
  std::string text;
};

RunSpec ResolveRun(const KeyValues& kv);
RunData LoadRunData(const RunSpec& spec);
std::unique_ptr<NeuralModel> BuildModel(const RunSpec& spec, std::size_t vocab_size);

// Reads a run directory written by `train`.
struct LoadedRun {
  RunSpec spec;
  Vocab vocab;
  Tokenizer tokenizer = Tokenizer::Whitespace();
  std::unique_ptr<NeuralModel> model;
};
LoadedRun LoadRun(const std::string& dir);

}  // namespace lmlab::cli

#endif  // LMLAB_TOOLS_CLI_COMMON_H_
