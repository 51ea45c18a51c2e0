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

#ifndef LMLAB_OPS_H_
#define LMLAB_OPS_H_

#include <span>
#include <vector>

#include "lmlab/tape.h"

namespace lmlab {

// Differentiable operations. All inputs must live on the same tape and have
// exactly matching shapes unless an op says otherwise.

Var MatMul(Var a, Var b);    // [m x k] * [k x n]
Var MatMulNT(Var a, Var b);  // [m x k] * [n x k]^T
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);  // elementwise
Var Scale(Var a, Real s);
// x [m x n] plus bias [n] added to every row; the one documented broadcast.
Var AddRowBias(Var x, Var bias);
// max(0, x); the subgradient at exactly 0 is 0.
Var Relu(Var x);
Var Square(Var x);
Var Abs(Var x);  // subgradient 0 at 0
Var Sum(Var x);
Var Mean(Var x);
// [m x n] -> [m], per-row sum of squares.
Var RowSumSquares(Var x);
Var Reshape(Var x, std::vector<std::size_t> shape);

// exp(beta v_i) / sum_j exp(beta v_j), max-shifted. Rank-1 input, or rank-2
// applied to each row independently.
Var Softmax(Var v, Real beta = 1);

// Per-row normalisation to zero mean and unit variance (no affine terms).
Var LayerNormRows(Var x, Real eps = 1e-5);

// Rows of table [V x d] selected by ids -> [n x d].
Var GatherRows(Var table, std::span<const TokenId> ids);
Var ConcatCols(std::span<const Var> parts);
Var SliceCols(Var x, std::size_t begin, std::size_t count);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(Var x, std::size_t begin, std::size_t count);

// Mean over rows of -log softmax(logits_i)[target_i], weighted by `weights`
// (all ones when empty). Log-sum-exp stabilised. Result is a scalar [1].
Var CrossEntropy(Var logits, std::span<const TokenId> targets,
                 std::span<const Real> weights = {});

struct AttentionSpec {
  std::size_t seq_len = 0;  // rows per independent sequence block
  std::size_t heads = 1;
  bool causal = true;       // position i sees j <= i only
};

// Receives per-head attention weights: weights[block][head] is seq_len x seq_len.
struct AttentionCapture {
  std::vector<std::vector<Tensor>> weights;
};

// Multi-head attention over stacked sequences. q, k are [B*T x H*dk] and v is
// [B*T x H*dv]; head h uses column block h of each. For every block and head:
//   c_ij = softmax_j(q_i . k_j) over allowed j,  out_i = sum_j c_ij v_j.
// Output is [B*T x H*dv], heads concatenated in order.
Var Attention(Var q, Var k, Var v, const AttentionSpec& spec,
              AttentionCapture* capture = nullptr);

}  // namespace lmlab

#endif  // LMLAB_OPS_H_
