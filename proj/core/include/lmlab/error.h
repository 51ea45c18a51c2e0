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

#ifndef LMLAB_ERROR_H_
#define LMLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace lmlab {

#ifdef LMLAB_FLOAT32
using Real = float;
#else
using Real = double;
#endif

// Error categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kConfig,       // invalid configuration or parameters
  kData,         // malformed or insufficient input data
  kNumeric,      // divergence, non-finite values, solver failure
  kUnsupported,  // feature deliberately outside the supported class
  kDimension,    // tensor shape mismatch
  kContract,     // violated precondition of an API call
  kIo,           // file system failures
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& message);

}  // namespace lmlab

#endif  // LMLAB_ERROR_H_
