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

#include <fstream>
#include <sstream>

#include "lmlab/ffn_lm.h"
#include "lmlab/model.h"
#include "lmlab/rnn.h"
#include "lmlab/serialize.h"
#include "lmlab/transformer.h"

namespace lmlab {
namespace {

constexpr char kMagic[4] = {'T', 'L', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;

void WriteCheckpoint(std::ostream& out, const NeuralModel& model) {
  out.write(kMagic, 4);
  WriteU32(out, kVersion);
  WriteString(out, std::string(ModelKindName(model.kind())));
  WriteString(out, model.ConfigText());
  WriteU32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    WriteString(out, p.name);
    WriteTensor(out, p.value);
  }
}

struct Header {
  ModelKind kind;
  std::string config;
  std::uint32_t count;
};

Header ReadHeader(std::istream& in, const std::string& path) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    Fail(ErrorKind::kData, "checkpoint '" + path + "': bad magic, not a checkpoint file");
  }
  const std::uint32_t version = ReadU32(in);
  if (version != kVersion) {
    Fail(ErrorKind::kUnsupported, "checkpoint '" + path + "': format version " +
                                      std::to_string(version) + " is not supported");
  }
  Header h;
  h.kind = ParseModelKind(ReadString(in));
  h.config = ReadString(in);
  h.count = ReadU32(in);
  return h;
}

std::ifstream OpenForRead(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
  return in;
}

void ReadParamsInto(std::istream& in, const Header& h, NeuralModel& model,
                    const std::string& path) {
  auto& params = model.params();
  if (h.count != params.size()) {
    Fail(ErrorKind::kData, "checkpoint '" + path + "': holds " + std::to_string(h.count) +
                               " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto& p : params) {
    const std::string name = ReadString(in);
    Tensor t = ReadTensor(in);
    if (name != p.name || t.shape() != p.value.shape()) {
      Fail(ErrorKind::kData, "checkpoint '" + path + "': tensor '" + name + "' " +
                                 t.ShapeString() + " does not match model tensor '" + p.name +
                                 "' " + p.value.ShapeString());
    }
    p.value = std::move(t);
  }
}

}  // namespace

std::unique_ptr<NeuralModel> MakeModel(ModelKind kind, std::string_view config_text) {
  switch (kind) {
    case ModelKind::kTransformer:
      return std::make_unique<TransformerModel>(TransformerConfig::FromText(config_text));
    case ModelKind::kRnn:
      return std::make_unique<RnnModel>(RnnConfig::FromText(config_text));
    case ModelKind::kFfnLm:
      return std::make_unique<FfnLmModel>(FfnLmConfig::FromText(config_text));
  }
  Fail(ErrorKind::kConfig, "unknown model kind");
}

std::string CheckpointBytes(const NeuralModel& model) {
  std::ostringstream out(std::ios::binary);
  WriteCheckpoint(out, model);
  return out.str();
}

void SaveCheckpoint(const NeuralModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write checkpoint '" + path + "'");
  WriteCheckpoint(out, model);
  out.flush();
  if (!out) Fail(ErrorKind::kIo, "write failed for checkpoint '" + path + "'");
}

std::unique_ptr<NeuralModel> LoadCheckpoint(const std::string& path) {
  auto in = OpenForRead(path);
  const Header h = ReadHeader(in, path);
  auto model = MakeModel(h.kind, h.config);
  ReadParamsInto(in, h, *model, path);
  return model;
}

void LoadCheckpointInto(NeuralModel& model, const std::string& path) {
  auto in = OpenForRead(path);
  const Header h = ReadHeader(in, path);
  if (h.kind != model.kind() || h.config != model.ConfigText()) {
    Fail(ErrorKind::kData, "checkpoint '" + path + "': config mismatch (checkpoint is a " +
                               std::string(ModelKindName(h.kind)) + " with\n" + h.config +
                               "model is a " + std::string(ModelKindName(model.kind())) +
                               " with\n" + model.ConfigText() + ")");
  }
  ReadParamsInto(in, h, model, path);
}

std::uint64_t CheckpointParamCount(const std::string& path) {
  auto in = OpenForRead(path);
  const Header h = ReadHeader(in, path);
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < h.count; ++i) {
    ReadString(in);
    total += ReadTensor(in).size();
  }
  return total;
}

}  // namespace lmlab
