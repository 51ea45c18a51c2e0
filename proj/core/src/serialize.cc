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

#include "lmlab/serialize.h"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace lmlab {
namespace {

constexpr char kTensorMagic[4] = {'T', 'L', 'M', '1'};
constexpr std::uint32_t kMaxRank = 8;

template <typename T>
void WriteLE(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T ReadLE(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) Fail(ErrorKind::kData, "unexpected end of serialized stream");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void WriteU32(std::ostream& out, std::uint32_t v) { WriteLE(out, v); }
void WriteU64(std::ostream& out, std::uint64_t v) { WriteLE(out, v); }
void WriteF64(std::ostream& out, double v) { WriteLE(out, v); }
std::uint32_t ReadU32(std::istream& in) { return ReadLE<std::uint32_t>(in); }
std::uint64_t ReadU64(std::istream& in) { return ReadLE<std::uint64_t>(in); }
double ReadF64(std::istream& in) { return ReadLE<double>(in); }

void WriteString(std::ostream& out, const std::string& s) {
  WriteU32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::istream& in) {
  const std::uint32_t n = ReadU32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) Fail(ErrorKind::kData, "unexpected end of serialized string");
  return s;
}

void WriteTensor(std::ostream& out, const Tensor& t) {
  out.write(kTensorMagic, 4);
  WriteU32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) WriteU64(out, d);
  for (Real v : t.data()) WriteF64(out, static_cast<double>(v));
}

Tensor ReadTensor(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTensorMagic, 4) != 0) {
    Fail(ErrorKind::kData, "tensor stream: bad magic (expected TLM1)");
  }
  const std::uint32_t rank = ReadU32(in);
  if (rank == 0 || rank > kMaxRank) {
    Fail(ErrorKind::kData, "tensor stream: unsupported rank " + std::to_string(rank));
  }
  std::vector<std::size_t> shape(rank);
  for (auto& d : shape) {
    d = static_cast<std::size_t>(ReadU64(in));
    if (d == 0) Fail(ErrorKind::kData, "tensor stream: zero dimension");
  }
  std::vector<Real> data(ShapeProduct(shape));
  for (Real& v : data) v = static_cast<Real>(ReadF64(in));
  return Tensor(std::move(shape), std::move(data));
}

std::uint64_t SerializedTensorBytes(const Tensor& t) {
  return 4 + 4 + 8 * t.rank() + 8 * t.size();
}

}  // namespace lmlab
