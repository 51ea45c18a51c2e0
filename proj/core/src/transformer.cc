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

#include "lmlab/transformer.h"

#include <cmath>
#include <unordered_map>

#include "lmlab/config_text.h"
#include "lmlab/text.h"

namespace lmlab {
namespace {

bool IsAttentionLayer(std::size_t l) { return l % 2 == 0; }

std::string LayerName(std::size_t l, const char* tensor) {
  return "layer" + std::to_string(l) + "." + tensor;
}

Var AttentionCore(const AttentionParams& params, Var h, std::size_t seq_len,
                  const TransformerConfig& config, AttentionCapture* capture) {
  Var q, k;
  if (config.dense_bilinear) {
    q = MatMul(h, params.bilinear);
    std::vector<Var> copies(config.heads, h);
    k = config.heads == 1 ? h : ConcatCols(copies);
  } else {
    q = MatMulNT(h, params.query);
    k = MatMulNT(h, params.key);
  }
  Var v = MatMulNT(h, params.value);
  Var o = Attention(q, k, v, AttentionSpec{seq_len, config.heads, config.causal}, capture);
  if (config.out_proj) o = MatMulNT(o, params.out);
  return o;
}

Var FfnCore(const FfnParams& params, Var h) {
  Var hidden = Relu(AddRowBias(MatMulNT(h, params.w0), params.b0));
  return AddRowBias(MatMulNT(hidden, params.w1), params.b1);
}

}  // namespace

void TransformerConfig::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, "transformer config: " + msg); };
  if (vocab_size < 1) bad("vocab_size must be >= 1");
  if (dim < 1) bad("dim must be >= 1");
  if (window < 1) bad("window must be >= 1");
  if (heads < 1 || dim % heads != 0) {
    bad("dim (" + std::to_string(dim) + ") must be a multiple of heads (" +
        std::to_string(heads) + ")");
  }
  if (pos_dim % 2 != 0) bad("pos_dim must be even, got " + std::to_string(pos_dim));
  if (additive_positions) {
    if (pos_dim != 0 && pos_dim != dim) bad("additive positions need pos_dim == dim");
  } else if (pos_dim >= dim) {
    bad("pos_dim must leave room for the word embedding (pos_dim < dim)");
  }
  if (layers > 1 && hidden < 1) bad("hidden must be >= 1 when FFN layers are present");
}

std::string TransformerConfig::ToText() const {
  std::string s;
  auto put = [&s](const char* k, std::uint64_t v) { s += std::string(k) + "=" + std::to_string(v) + "\n"; };
  put("vocab_size", vocab_size);
  put("dim", dim);
  put("pos_dim", pos_dim);
  put("window", window);
  put("layers", layers);
  put("heads", heads);
  put("hidden", hidden);
  put("residual", residual);
  put("layer_norm", layer_norm);
  put("tied_decoder", tied_decoder);
  put("dense_bilinear", dense_bilinear);
  put("causal", causal);
  put("additive_positions", additive_positions);
  put("out_proj", out_proj);
  return s;
}

TransformerConfig TransformerConfig::FromText(std::string_view text) {
  const KeyValues kv = KeyValues::Parse(text);
  kv.RejectUnknown({"vocab_size", "dim", "pos_dim", "window", "layers", "heads", "hidden",
                    "residual", "layer_norm", "tied_decoder", "dense_bilinear", "causal",
                    "additive_positions", "out_proj"},
                   "transformer config");
  TransformerConfig c;
  c.vocab_size = kv.GetUInt("vocab_size", c.vocab_size);
  c.dim = kv.GetUInt("dim", c.dim);
  c.pos_dim = kv.GetUInt("pos_dim", c.pos_dim);
  c.window = kv.GetUInt("window", c.window);
  c.layers = kv.GetUInt("layers", c.layers);
  c.heads = kv.GetUInt("heads", c.heads);
  c.hidden = kv.GetUInt("hidden", c.hidden);
  c.residual = kv.GetBool("residual", c.residual);
  c.layer_norm = kv.GetBool("layer_norm", c.layer_norm);
  c.tied_decoder = kv.GetBool("tied_decoder", c.tied_decoder);
  c.dense_bilinear = kv.GetBool("dense_bilinear", c.dense_bilinear);
  c.causal = kv.GetBool("causal", c.causal);
  c.additive_positions = kv.GetBool("additive_positions", c.additive_positions);
  c.out_proj = kv.GetBool("out_proj", c.out_proj);
  c.Validate();
  return c;
}

Tensor PositionalEncoding(std::size_t length, std::size_t pos_dim) {
  if (pos_dim < 2 || pos_dim % 2 != 0) {
    Fail(ErrorKind::kConfig, "positional_encoding: dimension must be even and >= 2, got " +
                                 std::to_string(pos_dim));
  }
  Tensor pe({length, pos_dim});
  for (std::size_t s = 0; s < length; ++s) {
    for (std::size_t i = 1; i <= pos_dim / 2; ++i) {
      const double freq = std::pow(10000.0, 2.0 * static_cast<double>(i) /
                                                static_cast<double>(pos_dim));
      const double angle = static_cast<double>(s) / freq;
      pe.at(s, 2 * i - 2) = static_cast<Real>(std::cos(angle));
      pe.at(s, 2 * i - 1) = static_cast<Real>(std::sin(angle));
    }
  }
  return pe;
}

std::vector<ParamShape> TransformerShapes(const TransformerConfig& c) {
  c.Validate();
  const std::size_t p = c.dim;
  std::vector<ParamShape> shapes;
  shapes.push_back({"embed", {c.vocab_size, c.word_dim()}});
  for (std::size_t l = 0; l < c.layers; ++l) {
    if (IsAttentionLayer(l)) {
      if (c.dense_bilinear) {
        shapes.push_back({LayerName(l, "bilinear"), {p, c.heads * p}});
      } else {
        shapes.push_back({LayerName(l, "query"), {p, p}});
        shapes.push_back({LayerName(l, "key"), {p, p}});
      }
      shapes.push_back({LayerName(l, "value"), {p, p}});
      if (c.out_proj) shapes.push_back({LayerName(l, "out"), {p, p}});
    } else {
      shapes.push_back({LayerName(l, "w0"), {c.hidden, p}});
      shapes.push_back({LayerName(l, "b0"), {c.hidden}, true});
      shapes.push_back({LayerName(l, "w1"), {p, c.hidden}});
      shapes.push_back({LayerName(l, "b1"), {p}, true});
    }
  }
  if (!c.tied_decoder) shapes.push_back({"decoder", {c.vocab_size, p}});
  return shapes;
}

ParamCountReport CountParams(const TransformerConfig& config) {
  ParamCountReport r;
  for (const auto& s : TransformerShapes(config)) {
    r.exact += ShapeProduct(s.shape);
    if (s.name != "embed" && s.name != "decoder") r.non_embedding += ShapeProduct(s.shape);
  }
  const double p = static_cast<double>(config.dim);
  r.twelve_d_p2 = 12.0 * static_cast<double>(config.layers) * p * p;
  return r;
}

Var AttentionLayer(const AttentionParams& params, Var u, std::size_t seq_len,
                   const TransformerConfig& config, AttentionCapture* capture) {
  Var o = AttentionCore(params, u, seq_len, config, capture);
  return config.residual ? Add(u, o) : o;
}

Var FfnLayer(const FfnParams& params, Var u, bool residual) {
  Var o = FfnCore(params, u);
  return residual ? Add(u, o) : o;
}

TransformerModel::TransformerModel(TransformerConfig config) : config_(std::move(config)) {
  config_.Validate();
  AllocateParams();
}

std::vector<ParamShape> TransformerModel::Shapes() const { return TransformerShapes(config_); }

Var TransformerModel::Forward(Tape& tape, std::span<const Var> params,
                              std::span<const TokenId> inputs, std::size_t seq_len,
                              ForwardCapture* capture) const {
  const auto shapes = Shapes();
  if (params.size() != shapes.size()) {
    Fail(ErrorKind::kContract, "transformer forward: expected " + std::to_string(shapes.size()) +
                                   " bound parameters, got " + std::to_string(params.size()));
  }
  if (seq_len == 0 || inputs.empty() || inputs.size() % seq_len != 0) {
    Fail(ErrorKind::kContract, "transformer forward: inputs must be whole blocks of seq_len");
  }
  if (seq_len > config_.window) {
    Fail(ErrorKind::kContract, "transformer forward: sequence of length " +
                                   std::to_string(seq_len) + " exceeds window L=" +
                                   std::to_string(config_.window));
  }
  std::unordered_map<std::string, Var> by_name;
  for (std::size_t i = 0; i < shapes.size(); ++i) by_name.emplace(shapes[i].name, params[i]);
  auto get = [&by_name](const std::string& name) { return by_name.at(name); };

  const std::size_t n = inputs.size();
  const std::size_t blocks = n / seq_len;
  const Var embed = get("embed");
  Var u = GatherRows(embed, inputs);
  if (config_.pos_dim > 0) {
    const Tensor pe = PositionalEncoding(seq_len, config_.pos_dim);
    Tensor tiled({n, config_.pos_dim});
    for (std::size_t b = 0; b < blocks; ++b) {
      std::copy(pe.data().begin(), pe.data().end(),
                tiled.data().begin() + b * seq_len * config_.pos_dim);
    }
    const Var pos = tape.Constant(std::move(tiled));
    if (config_.additive_positions) {
      u = Add(u, pos);
    } else {
      const Var parts[] = {u, pos};
      u = ConcatCols(parts);
    }
  }
  if (capture != nullptr) {
    capture->labels = {"input"};
    capture->activations = {u.value()};
    capture->attention.assign(config_.layers, AttentionCapture{});
  }
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const Var h = config_.layer_norm ? LayerNormRows(u) : u;
    Var o;
    if (IsAttentionLayer(l)) {
      AttentionParams ap;
      if (config_.dense_bilinear) {
        ap.bilinear = get(LayerName(l, "bilinear"));
      } else {
        ap.query = get(LayerName(l, "query"));
        ap.key = get(LayerName(l, "key"));
      }
      ap.value = get(LayerName(l, "value"));
      if (config_.out_proj) ap.out = get(LayerName(l, "out"));
      o = AttentionCore(ap, h, seq_len, config_,
                        capture != nullptr ? &capture->attention[l] : nullptr);
    } else {
      o = FfnCore({get(LayerName(l, "w0")), get(LayerName(l, "b0")), get(LayerName(l, "w1")),
                   get(LayerName(l, "b1"))},
                  h);
    }
    u = config_.residual ? Add(u, o) : o;
    if (capture != nullptr) {
      capture->labels.push_back((IsAttentionLayer(l) ? "attention" : "ffn") + std::to_string(l));
      capture->activations.push_back(u.value());
    }
  }
  if (config_.layer_norm) u = LayerNormRows(u);
  if (config_.tied_decoder) {
    const Var word = config_.word_dim() == config_.dim ? u : SliceCols(u, 0, config_.word_dim());
    return MatMulNT(word, embed);
  }
  return MatMulNT(u, get("decoder"));
}

}  // namespace lmlab
