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

#include "cli.h"

#include <algorithm>
#include <exception>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "commands.h"
#include "lmlab/error.h"

namespace lmlab::cli {
namespace {

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kData:
      return kExitData;
    case ErrorKind::kNumeric:
      return kExitNumeric;
    case ErrorKind::kUnsupported:
      return kExitUnsupported;
    case ErrorKind::kDimension:
      return kExitDimension;
    case ErrorKind::kContract:
      return kExitContract;
    case ErrorKind::kIo:
      return kExitIo;
  }
  return kExitInternal;
}

int Report(std::ostream& err, const std::string& category, std::string message, int code) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  err << "lmlab: error[" << category << "]: " << message << "\n";
  return code;
}

}  // namespace

void TuneAllocator() {
#if defined(__GLIBC__)
  constexpr int kBytes = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kBytes);
  mallopt(M_TRIM_THRESHOLD, kBytes);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Io io{out, err};
  CLI::App app{"lmlab: language-model laboratory", "lmlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lmlab 0.1.0");
  AddTrainCommands(app, io);
  AddTextCommands(app, io);
  AddGrammarCommands(app, io);
  AddAnalysisCommands(app, io);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help, --version
    return Report(err, "usage", e.what(), kExitUsage);
  } catch (const Error& e) {
    return Report(err, ErrorKindName(e.kind()), e.what(), ExitCode(e.kind()));
  } catch (const std::exception& e) {
    return Report(err, "internal", e.what(), kExitInternal);
  }
  return kExitOk;
}

}  // namespace lmlab::cli
