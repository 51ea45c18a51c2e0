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

#include "lmlab/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace lmlab {
namespace {

Tape& SameTape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    Fail(ErrorKind::kContract, std::string(op) + ": inputs must share a tape");
  }
  return *a.tape();
}

void RequireRank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    Fail(ErrorKind::kDimension, std::string(op) + ": expected a matrix, got " + t.ShapeString());
  }
}

// Accumulates g * scale into the gradient buffer of `v` when it needs one.
void Accumulate(Tape& tape, Var v, const Tensor& g, Real scale = 1) {
  if (!v.requires_grad()) return;
  Tensor& buf = tape.GradBuffer(v.id());
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

template <typename Fn>
Var Unary(Var x, Tensor out, Fn local_grad) {
  Tape& tape = *x.tape();
  return tape.Record(std::move(out), {x}, [x, local_grad](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    Tensor& buf = t.GradBuffer(x.id());
    const Tensor& xv = t.value(x.id());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i] * local_grad(xv[i]);
  });
}

}  // namespace

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireRank2(av, "matmul");
  RequireRank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    Fail(ErrorKind::kDimension,
         "matmul: incompatible shapes " + av.ShapeString() + " and " + bv.ShapeString());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  GemmNN(m, k, n, av.data().data(), bv.data().data(), out.data().data());
  return tape.Record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      GemmNT(m, n, k, g.data().data(), t.value(b.id()).data().data(),
             t.GradBuffer(a.id()).data().data());
    }
    if (b.requires_grad()) {
      GemmTN(m, k, n, t.value(a.id()).data().data(), g.data().data(),
             t.GradBuffer(b.id()).data().data());
    }
  });
}

Var MatMulNT(Var a, Var b) {
  Tape& tape = SameTape(a, b, "matmul_nt");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireRank2(av, "matmul_nt");
  RequireRank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) {
    Fail(ErrorKind::kDimension, "matmul_nt: incompatible shapes " + av.ShapeString() +
                                    " and transposed " + bv.ShapeString());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out({m, n});
  GemmNT(m, k, n, av.data().data(), bv.data().data(), out.data().data());
  return tape.Record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      GemmNN(m, n, k, g.data().data(), t.value(b.id()).data().data(),
             t.GradBuffer(a.id()).data().data());
    }
    if (b.requires_grad()) {
      GemmTN(m, n, k, g.data().data(), t.value(a.id()).data().data(),
             t.GradBuffer(b.id()).data().data());
    }
  });
}

Var Add(Var a, Var b) {
  Tape& tape = SameTape(a, b, "add");
  CheckSameShape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return tape.Record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Accumulate(t, a, g);
    Accumulate(t, b, g);
  });
}

Var Sub(Var a, Var b) {
  Tape& tape = SameTape(a, b, "sub");
  CheckSameShape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return tape.Record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Accumulate(t, a, g);
    Accumulate(t, b, g, Real{-1});
  });
}

Var Mul(Var a, Var b) {
  Tape& tape = SameTape(a, b, "mul");
  CheckSameShape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return tape.Record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& buf = t.GradBuffer(a.id());
      const Tensor& bv = t.value(b.id());
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      Tensor& buf = t.GradBuffer(b.id());
      const Tensor& av = t.value(a.id());
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i] * av[i];
    }
  });
}

Var Scale(Var a, Real s) {
  Tensor out = a.value();
  for (Real& v : out.data()) v *= s;
  return a.tape()->Record(std::move(out), {a},
                          [a, s](Tape& t, const Tensor& g) { Accumulate(t, a, g, s); });
}

Var AddRowBias(Var x, Var bias) {
  Tape& tape = SameTape(x, bias, "add_row_bias");
  const Tensor& xv = x.value();
  RequireRank2(xv, "add_row_bias");
  if (bias.value().size() != xv.cols()) {
    Fail(ErrorKind::kDimension, "add_row_bias: bias " + bias.value().ShapeString() +
                                    " does not match rows of " + xv.ShapeString());
  }
  Tensor out = xv;
  const std::size_t m = xv.rows(), n = xv.cols();
  auto bv = bias.value().data();
  for (std::size_t r = 0; r < m; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < n; ++c) row[c] += bv[c];
  }
  return tape.Record(std::move(out), {x, bias}, [x, bias, m, n](Tape& t, const Tensor& g) {
    Accumulate(t, x, g);
    if (bias.requires_grad()) {
      Tensor& buf = t.GradBuffer(bias.id());
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) buf[c] += g[r * n + c];
      }
    }
  });
}

Var Relu(Var x) {
  Tensor out = x.value();
  for (Real& v : out.data()) v = v > Real{0} ? v : Real{0};
  return Unary(x, std::move(out), [](Real v) { return v > Real{0} ? Real{1} : Real{0}; });
}

Var Square(Var x) {
  Tensor out = x.value();
  for (Real& v : out.data()) v = v * v;
  return Unary(x, std::move(out), [](Real v) { return 2 * v; });
}

Var Abs(Var x) {
  Tensor out = x.value();
  for (Real& v : out.data()) v = std::abs(v);
  return Unary(x, std::move(out), [](Real v) {
    return v > Real{0} ? Real{1} : (v < Real{0} ? Real{-1} : Real{0});
  });
}

Var Sum(Var x) {
  Real s = 0;
  for (Real v : x.value().data()) s += v;
  return x.tape()->Record(Tensor::Scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    for (Real& v : t.GradBuffer(x.id()).data()) v += g[0];
  });
}

Var Mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) Fail(ErrorKind::kContract, "mean: empty tensor");
  return Scale(Sum(x), Real{1} / static_cast<Real>(n));
}

Var RowSumSquares(Var x) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "row_sum_squares");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m});
  for (std::size_t r = 0; r < m; ++r) {
    Real s = 0;
    for (Real v : xv.row(r)) s += v * v;
    out[r] = s;
  }
  return x.tape()->Record(std::move(out), {x}, [x, m, n](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    Tensor& buf = t.GradBuffer(x.id());
    const Tensor& xv = t.value(x.id());
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) buf[r * n + c] += 2 * g[r] * xv[r * n + c];
    }
  });
}

Var Reshape(Var x, std::vector<std::size_t> shape) {
  if (ShapeProduct(shape) != x.value().size()) {
    Fail(ErrorKind::kDimension, "reshape: cannot view " + x.value().ShapeString() + " as " +
                                    ShapeToString(shape));
  }
  Tensor out(std::move(shape),
             std::vector<Real>(x.value().data().begin(), x.value().data().end()));
  return x.tape()->Record(std::move(out), {x},
                          [x](Tape& t, const Tensor& g) {
                            if (!x.requires_grad()) return;
                            Tensor& buf = t.GradBuffer(x.id());
                            for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
                          });
}

Var Softmax(Var v, Real beta) {
  const Tensor& in = v.value();
  if (in.rank() != 1 && in.rank() != 2) {
    Fail(ErrorKind::kDimension, "softmax: expected rank 1 or 2, got " + in.ShapeString());
  }
  if (!(beta > Real{0})) Fail(ErrorKind::kConfig, "softmax: beta must be positive");
  const std::size_t m = in.rows(), n = in.cols();
  if (n == 0) Fail(ErrorKind::kDimension, "softmax: empty input");
  Tensor out(in.shape());
  for (std::size_t r = 0; r < m; ++r) {
    auto x = in.row(r);
    auto y = out.row(r);
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Real a : x) mx = std::max(mx, a);
    Real z = 0;
    for (std::size_t c = 0; c < n; ++c) {
      y[c] = std::exp(beta * (x[c] - mx));
      z += y[c];
    }
    for (Real& a : y) a /= z;
  }
  NodeId out_id = static_cast<NodeId>(v.tape()->size());
  return v.tape()->Record(std::move(out), {v}, [v, beta, m, n, out_id](Tape& t, const Tensor& g) {
    if (!v.requires_grad()) return;
    const Tensor& y = t.value(out_id);
    Tensor& buf = t.GradBuffer(v.id());
    for (std::size_t r = 0; r < m; ++r) {
      Real dot = 0;
      for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        buf[r * n + c] += beta * y[r * n + c] * (g[r * n + c] - dot);
      }
    }
  });
}

Var LayerNormRows(Var x, Real eps) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "layer_norm");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  auto inv_sigma = std::make_shared<std::vector<Real>>(m);
  for (std::size_t r = 0; r < m; ++r) {
    auto in = xv.row(r);
    Real mu = 0;
    for (Real a : in) mu += a;
    mu /= static_cast<Real>(n);
    Real var = 0;
    for (Real a : in) var += (a - mu) * (a - mu);
    var /= static_cast<Real>(n);
    const Real is = Real{1} / std::sqrt(var + eps);
    (*inv_sigma)[r] = is;
    auto o = out.row(r);
    for (std::size_t c = 0; c < n; ++c) o[c] = (in[c] - mu) * is;
  }
  NodeId out_id = static_cast<NodeId>(x.tape()->size());
  return x.tape()->Record(std::move(out), {x},
                          [x, m, n, inv_sigma, out_id](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    const Tensor& y = t.value(out_id);
    Tensor& buf = t.GradBuffer(x.id());
    for (std::size_t r = 0; r < m; ++r) {
      Real mg = 0, mgy = 0;
      for (std::size_t c = 0; c < n; ++c) {
        mg += g[r * n + c];
        mgy += g[r * n + c] * y[r * n + c];
      }
      mg /= static_cast<Real>(n);
      mgy /= static_cast<Real>(n);
      for (std::size_t c = 0; c < n; ++c) {
        buf[r * n + c] += (*inv_sigma)[r] * (g[r * n + c] - mg - y[r * n + c] * mgy);
      }
    }
  });
}

Var GatherRows(Var table, std::span<const TokenId> ids) {
  const Tensor& tv = table.value();
  RequireRank2(tv, "gather_rows");
  const std::size_t d = tv.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      Fail(ErrorKind::kContract, "gather_rows: id " + std::to_string(ids[i]) +
                                     " outside table of " + std::to_string(tv.rows()) +
                                     " rows");
    }
    auto src = tv.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<TokenId> idx(ids.begin(), ids.end());
  return table.tape()->Record(std::move(out), {table},
                              [table, idx = std::move(idx), d](Tape& t, const Tensor& g) {
    if (!table.requires_grad()) return;
    Tensor& buf = t.GradBuffer(table.id());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Real* dst = buf.data().data() + static_cast<std::size_t>(idx[i]) * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += g[i * d + c];
    }
  });
}

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kContract, "concat_cols: no inputs");
  Tape& tape = *parts[0].tape();
  const std::size_t m = parts[0].value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape() != &tape) Fail(ErrorKind::kContract, "concat_cols: inputs must share a tape");
    RequireRank2(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      Fail(ErrorKind::kDimension, "concat_cols: row mismatch " + parts[0].value().ShapeString() +
                                      " vs " + p.value().ShapeString());
    }
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + offset);
    }
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.Record(std::move(out), parts, [inputs, m, total](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t w = t.value(p.id()).cols();
      if (p.requires_grad()) {
        Tensor& buf = t.GradBuffer(p.id());
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) buf[r * w + c] += g[r * total + off + c];
        }
      }
      off += w;
    }
  });
}

Var SliceCols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "slice_cols");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (begin + count > n) {
    Fail(ErrorKind::kDimension, "slice_cols: columns [" + std::to_string(begin) + ", " +
                                    std::to_string(begin + count) + ") outside " +
                                    xv.ShapeString());
  }
  Tensor out({m, count});
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(xv.row(r).begin() + begin, count, out.row(r).begin());
  }
  return x.tape()->Record(std::move(out), {x}, [x, m, n, begin, count](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    Tensor& buf = t.GradBuffer(x.id());
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < count; ++c) buf[r * n + begin + c] += g[r * count + c];
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) Fail(ErrorKind::kContract, "concat_rows: no inputs");
  Tape& tape = *parts[0].tape();
  const std::size_t n = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.tape() != &tape) Fail(ErrorKind::kContract, "concat_rows: inputs must share a tape");
    RequireRank2(p.value(), "concat_rows");
    if (p.value().cols() != n) {
      Fail(ErrorKind::kDimension, "concat_rows: column mismatch " +
                                      parts[0].value().ShapeString() + " vs " +
                                      p.value().ShapeString());
    }
    rows += p.value().rows();
  }
  std::vector<Real> data;
  data.reserve(rows * n);
  for (const Var& p : parts) {
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  Tensor out({rows, n}, std::move(data));
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.Record(std::move(out), parts, [inputs](Tape& t, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t sz = t.value(p.id()).size();
      if (p.requires_grad()) {
        Tensor& buf = t.GradBuffer(p.id());
        for (std::size_t i = 0; i < sz; ++i) buf[i] += g[off + i];
      }
      off += sz;
    }
  });
}

Var SliceRows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  RequireRank2(xv, "slice_rows");
  const std::size_t n = xv.cols();
  if (begin + count > xv.rows()) {
    Fail(ErrorKind::kDimension, "slice_rows: rows [" + std::to_string(begin) + ", " +
                                    std::to_string(begin + count) + ") outside " +
                                    xv.ShapeString());
  }
  Tensor out({count, n}, std::vector<Real>(xv.data().begin() + begin * n,
                                           xv.data().begin() + (begin + count) * n));
  return x.tape()->Record(std::move(out), {x}, [x, begin, n](Tape& t, const Tensor& g) {
    if (!x.requires_grad()) return;
    Tensor& buf = t.GradBuffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) buf[begin * n + i] += g[i];
  });
}

Var CrossEntropy(Var logits, std::span<const TokenId> targets, std::span<const Real> weights) {
  const Tensor& lv = logits.value();
  RequireRank2(lv, "cross_entropy");
  const std::size_t m = lv.rows(), n = lv.cols();
  if (targets.size() != m) {
    Fail(ErrorKind::kContract, "cross_entropy: " + std::to_string(targets.size()) +
                                   " targets for " + std::to_string(m) + " positions");
  }
  if (!weights.empty() && weights.size() != m) {
    Fail(ErrorKind::kContract, "cross_entropy: weight count does not match positions");
  }
  auto probs = std::make_shared<Tensor>(std::vector<std::size_t>{m, n});
  std::vector<Real> w(m, Real{1});
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  Real total_w = 0, loss = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const TokenId tgt = targets[r];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= n) {
      Fail(ErrorKind::kContract, "cross_entropy: target " + std::to_string(tgt) +
                                     " outside vocabulary of " + std::to_string(n));
    }
    auto x = lv.row(r);
    auto p = probs->row(r);
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Real a : x) mx = std::max(mx, a);
    Real z = 0;
    for (std::size_t c = 0; c < n; ++c) {
      p[c] = std::exp(x[c] - mx);
      z += p[c];
    }
    for (Real& a : p) a /= z;
    if (w[r] != Real{0}) {
      loss += w[r] * (mx + std::log(z) - x[static_cast<std::size_t>(tgt)]);
      total_w += w[r];
    }
  }
  if (!(total_w > Real{0})) Fail(ErrorKind::kContract, "cross_entropy: no weighted positions");
  loss /= total_w;
  std::vector<TokenId> tg(targets.begin(), targets.end());
  return logits.tape()->Record(
      Tensor::Scalar(loss), {logits},
      [logits, probs, tg = std::move(tg), w = std::move(w), total_w, m, n](Tape& t,
                                                                            const Tensor& g) {
        if (!logits.requires_grad()) return;
        Tensor& buf = t.GradBuffer(logits.id());
        for (std::size_t r = 0; r < m; ++r) {
          if (w[r] == Real{0}) continue;
          const Real s = g[0] * w[r] / total_w;
          for (std::size_t c = 0; c < n; ++c) buf[r * n + c] += s * (*probs)[r * n + c];
          buf[r * n + static_cast<std::size_t>(tg[r])] -= s;
        }
      });
}

Var Attention(Var q, Var k, Var v, const AttentionSpec& spec, AttentionCapture* capture) {
  Tape& tape = SameTape(q, k, "attention");
  SameTape(q, v, "attention");
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  RequireRank2(qv, "attention");
  CheckSameShape(qv, kv, "attention q/k");
  RequireRank2(vv, "attention");
  const std::size_t rows = qv.rows();
  const std::size_t T = spec.seq_len, H = spec.heads;
  if (T == 0 || H == 0 || rows % T != 0 || vv.rows() != rows || qv.cols() % H != 0 ||
      vv.cols() % H != 0) {
    Fail(ErrorKind::kDimension, "attention: q " + qv.ShapeString() + ", v " + vv.ShapeString() +
                                    " incompatible with seq_len " + std::to_string(T) +
                                    " and " + std::to_string(H) + " heads");
  }
  const std::size_t B = rows / T;
  const std::size_t dk = qv.cols() / H, dv = vv.cols() / H;
  const std::size_t qcols = qv.cols(), vcols = vv.cols();

  // weights[(b*H + h)*T*T + i*T + j]; zero where masked.
  auto weights = std::make_shared<std::vector<Real>>(B * H * T * T, Real{0});
  Tensor out({rows, vcols});
  std::vector<Real> scores(T);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      Real* c = weights->data() + (b * H + h) * T * T;
      for (std::size_t i = 0; i < T; ++i) {
        const std::size_t jmax = spec.causal ? i + 1 : T;
        const Real* qi = qv.data().data() + (b * T + i) * qcols + h * dk;
        Real mx = -std::numeric_limits<Real>::infinity();
        for (std::size_t j = 0; j < jmax; ++j) {
          const Real* kj = kv.data().data() + (b * T + j) * qcols + h * dk;
          Real s = 0;
          for (std::size_t d = 0; d < dk; ++d) s += qi[d] * kj[d];
          scores[j] = s;
          mx = std::max(mx, s);
        }
        Real z = 0;
        for (std::size_t j = 0; j < jmax; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        Real* oi = out.data().data() + (b * T + i) * vcols + h * dv;
        for (std::size_t j = 0; j < jmax; ++j) {
          const Real cij = scores[j] / z;
          c[i * T + j] = cij;
          const Real* vj = vv.data().data() + (b * T + j) * vcols + h * dv;
          for (std::size_t e = 0; e < dv; ++e) oi[e] += cij * vj[e];
        }
      }
    }
  }
  if (capture != nullptr) {
    capture->weights.assign(B, std::vector<Tensor>(H));
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t h = 0; h < H; ++h) {
        const Real* c = weights->data() + (b * H + h) * T * T;
        capture->weights[b][h] = Tensor({T, T}, std::vector<Real>(c, c + T * T));
      }
    }
  }
  const bool causal = spec.causal;
  return tape.Record(
      std::move(out), {q, k, v},
      [q, k, v, weights, B, H, T, dk, dv, qcols, vcols, causal](Tape& t, const Tensor& g) {
        const Tensor& qv = t.value(q.id());
        const Tensor& kv = t.value(k.id());
        const Tensor& vv = t.value(v.id());
        Real* dq = q.requires_grad() ? t.GradBuffer(q.id()).data().data() : nullptr;
        Real* dk_buf = k.requires_grad() ? t.GradBuffer(k.id()).data().data() : nullptr;
        Real* dv_buf = v.requires_grad() ? t.GradBuffer(v.id()).data().data() : nullptr;
        std::vector<Real> dc(T), ds(T);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t h = 0; h < H; ++h) {
            const Real* c = weights->data() + (b * H + h) * T * T;
            for (std::size_t i = 0; i < T; ++i) {
              const std::size_t jmax = causal ? i + 1 : T;
              const Real* gi = g.data().data() + (b * T + i) * vcols + h * dv;
              Real dot = 0;
              for (std::size_t j = 0; j < jmax; ++j) {
                const Real* vj = vv.data().data() + (b * T + j) * vcols + h * dv;
                Real s = 0;
                for (std::size_t e = 0; e < dv; ++e) s += gi[e] * vj[e];
                dc[j] = s;
                dot += s * c[i * T + j];
                if (dv_buf != nullptr) {
                  Real* dvj = dv_buf + (b * T + j) * vcols + h * dv;
                  const Real cij = c[i * T + j];
                  for (std::size_t e = 0; e < dv; ++e) dvj[e] += cij * gi[e];
                }
              }
              for (std::size_t j = 0; j < jmax; ++j) ds[j] = c[i * T + j] * (dc[j] - dot);
              const Real* qi = qv.data().data() + (b * T + i) * qcols + h * dk;
              Real* dqi = dq != nullptr ? dq + (b * T + i) * qcols + h * dk : nullptr;
              for (std::size_t j = 0; j < jmax; ++j) {
                const Real* kj = kv.data().data() + (b * T + j) * qcols + h * dk;
                if (dqi != nullptr) {
                  for (std::size_t d = 0; d < dk; ++d) dqi[d] += ds[j] * kj[d];
                }
                if (dk_buf != nullptr) {
                  Real* dkj = dk_buf + (b * T + j) * qcols + h * dk;
                  for (std::size_t d = 0; d < dk; ++d) dkj[d] += ds[j] * qi[d];
                }
              }
            }
          }
        }
      });
}

}  // namespace lmlab
