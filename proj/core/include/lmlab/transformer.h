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

#ifndef LMLAB_TRANSFORMER_H_
#define LMLAB_TRANSFORMER_H_

#include <cstdint>
#include <memory>
#include <string>

#include "lmlab/model.h"

namespace lmlab {

// Decoder-only transformer hyperparameters. Layers alternate attention, FFN,
// attention, ... and `layers` counts each one separately.
struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;          // p
  std::size_t pos_dim = 8;       // d_pos; 0 disables positional information
  std::size_t window = 32;       // L
  std::size_t layers = 2;        // D
  std::size_t heads = 4;         // H, head dim q = p / H
  std::size_t hidden = 256;      // p_h
  bool residual = true;
  bool layer_norm = false;       // pre-norm on each sublayer input and before decoding
  bool tied_decoder = true;      // logits_w = u_word . iota(w)
  bool dense_bilinear = false;   // one p x p form per head instead of q x p query/key pairs
  bool causal = true;
  bool additive_positions = false;  // add instead of concatenate (requires pos_dim == dim)
  bool out_proj = false;         // p x p mixing map after the concatenated heads

  std::size_t head_dim() const { return dim / heads; }
  std::size_t word_dim() const { return additive_positions ? dim : dim - pos_dim; }

  void Validate() const;
  std::string ToText() const;
  static TransformerConfig FromText(std::string_view text);
};

// Sinusoidal encoding: for position s and i = 1..d/2, components (2i-1, 2i)
// (1-based) are cos and sin of s / 10000^(2i/d). Rows are positions 0..L-1.
Tensor PositionalEncoding(std::size_t length, std::size_t pos_dim);

struct ParamCountReport {
  std::uint64_t exact = 0;
  std::uint64_t non_embedding = 0;  // exact minus embedding and decoder tables
  double twelve_d_p2 = 0;  // 12 * D * p^2 with D as configured
};

// Exact count by shape enumeration, plus the 12 D p^2 rule of thumb.
ParamCountReport CountParams(const TransformerConfig& config);

// One attention layer's tensors bound on a tape.
struct AttentionParams {
  Var query;     // [p x p]: rows h*q..(h+1)*q-1 form head h's q x p map
  Var key;       // [p x p]
  Var bilinear;  // dense mode: [p x H*p], column block h is B_h
  Var value;     // [p x p]: head h's W_h is its row block
  Var out;       // optional [p x p]
};

struct FfnParams {
  Var w0;  // [p_h x p]
  Var b0;  // [p_h]
  Var w1;  // [p x p_h]
  Var b1;  // [p]
};

// U: stacked blocks [B*seq_len x p]. Per head h:
//   c_ij = softmax_{j<=i}(u_i . B_h . u_j),  out_i = W_h sum_j c_ij u_j
// heads concatenated to dim p; the input is added back when `residual`.
Var AttentionLayer(const AttentionParams& params, Var u, std::size_t seq_len,
                   const TransformerConfig& config, AttentionCapture* capture = nullptr);

// v_i = W1 max(0, W0 u_i + b0) + b1 per row, plus u_i when `residual`.
Var FfnLayer(const FfnParams& params, Var u, bool residual);

class TransformerModel final : public NeuralModel {
 public:
  explicit TransformerModel(TransformerConfig config);

  const TransformerConfig& config() const { return config_; }

  ModelKind kind() const override { return ModelKind::kTransformer; }
  std::string ConfigText() const override { return config_.ToText(); }
  std::size_t window() const override { return config_.window; }
  std::size_t vocab_size() const override { return config_.vocab_size; }
  std::vector<ParamShape> Shapes() const override;
  Var Forward(Tape& tape, std::span<const Var> params, std::span<const TokenId> inputs,
              std::size_t seq_len, ForwardCapture* capture = nullptr) const override;
  std::unique_ptr<NeuralModel> Clone() const override {
    return std::make_unique<TransformerModel>(*this);
  }

 private:
  TransformerConfig config_;
};

std::vector<ParamShape> TransformerShapes(const TransformerConfig& config);

}  // namespace lmlab

#endif  // LMLAB_TRANSFORMER_H_
