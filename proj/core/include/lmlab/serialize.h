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

#ifndef LMLAB_SERIALIZE_H_
#define LMLAB_SERIALIZE_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "lmlab/tensor.h"

namespace lmlab {

// Tensor wire format, all integers and reals little-endian:
//   "TLM1" | u32 rank | u64 dims[rank] | f64 data[product(dims)]
// Reals are always stored as 64-bit regardless of the build's Real type.
void WriteTensor(std::ostream& out, const Tensor& t);
Tensor ReadTensor(std::istream& in);
// Bytes WriteTensor would emit for a tensor of this shape.
std::uint64_t SerializedTensorBytes(const Tensor& t);

void WriteU32(std::ostream& out, std::uint32_t v);
void WriteU64(std::ostream& out, std::uint64_t v);
void WriteF64(std::ostream& out, double v);
// u32 length followed by raw bytes.
void WriteString(std::ostream& out, const std::string& s);
std::uint32_t ReadU32(std::istream& in);
std::uint64_t ReadU64(std::istream& in);
double ReadF64(std::istream& in);
std::string ReadString(std::istream& in);

}  // namespace lmlab

#endif  // LMLAB_SERIALIZE_H_
