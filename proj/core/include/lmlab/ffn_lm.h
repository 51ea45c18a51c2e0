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

#ifndef LMLAB_FFN_LM_H_
#define LMLAB_FFN_LM_H_

#include <memory>
#include <string>

#include "lmlab/model.h"

namespace lmlab {

// Fixed-window model: the L most recent embeddings are concatenated and passed
// through a one-hidden-layer relu network whose output is decoded against the
// embedding table. Windows that reach before the sequence start are padded
// with BOS.
struct FfnLmConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 32;     // p
  std::size_t context = 4;  // L
  std::size_t hidden = 128;

  void Validate() const;
  std::string ToText() const;
  static FfnLmConfig FromText(std::string_view text);
};

// Logits for one window of exactly `context` ids.
std::vector<Real> FfnLmForward(const class FfnLmModel& model, std::span<const TokenId> window);

class FfnLmModel final : public NeuralModel {
 public:
  explicit FfnLmModel(FfnLmConfig config);

  const FfnLmConfig& config() const { return config_; }

  ModelKind kind() const override { return ModelKind::kFfnLm; }
  std::string ConfigText() const override { return config_.ToText(); }
  std::size_t window() const override { return config_.context; }
  std::size_t vocab_size() const override { return config_.vocab_size; }
  std::vector<ParamShape> Shapes() const override;
  Var Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
              std::size_t seq_len, ForwardCapture* capture = nullptr) const override;
  std::unique_ptr<NeuralModel> Clone() const override {
    return std::make_unique<FfnLmModel>(*this);
  }

 private:
  FfnLmConfig config_;
};

}  // namespace lmlab

#endif  // LMLAB_FFN_LM_H_
