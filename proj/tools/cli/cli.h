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

#ifndef LMLAB_TOOLS_CLI_CLI_H_
#define LMLAB_TOOLS_CLI_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace lmlab::cli {

// Exit codes, one per error category.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitData = 4;
inline constexpr int kExitNumeric = 5;
inline constexpr int kExitUnsupported = 6;
inline constexpr int kExitDimension = 7;
inline constexpr int kExitContract = 8;
inline constexpr int kExitIo = 9;

// Runs the command line `args` (without the program name). Failures print
// one line "lmlab: error[<category>]: <message>" to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Keeps freed tensor buffers in the heap instead of returning them to the
// kernel after every step. Training allocates and frees the same large
// blocks repeatedly, and glibc's defaults spend much of that time in mmap
// and page faults. No-op on other C libraries.
void TuneAllocator();

}  // namespace lmlab::cli

#endif  // LMLAB_TOOLS_CLI_CLI_H_
