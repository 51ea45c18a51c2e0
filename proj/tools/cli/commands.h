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

#ifndef LMLAB_TOOLS_CLI_COMMANDS_H_
#define LMLAB_TOOLS_CLI_COMMANDS_H_

#include <CLI11.hpp>

#include "common.h"

namespace lmlab::cli {

// Each registers its subcommands on `app`. Callbacks write to `io`.
void AddTrainCommands(CLI::App& app, Io& io);     // train, generate, perplexity
void AddTextCommands(CLI::App& app, Io& io);      // ngram, embed
void AddGrammarCommands(CLI::App& app, Io& io);   // grammar, task
void AddAnalysisCommands(CLI::App& app, Io& io);  // scaling, probe

struct TrainOutcome {
  RunRecord record;
  std::size_t params = 0;
  std::size_t non_embedding_params = 0;
  std::size_t train_tokens = 0;
};

// Trains one run into `dir`: config.txt, vocab.txt, metrics.jsonl,
// timing.jsonl, summary.csv, checkpoint.tlmc, and for tasks milestones.json.
TrainOutcome TrainRun(const RunSpec& spec, const fs::path& dir);

}  // namespace lmlab::cli

#endif  // LMLAB_TOOLS_CLI_COMMANDS_H_
