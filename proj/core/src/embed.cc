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

#include "lmlab/embed.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lmlab/ops.h"

namespace lmlab {

Tensor CooccurrenceMatrix::ToTensor(bool ppmi) const {
  const std::size_t V = vocab_size_;
  Tensor t({V, V});
  for (std::size_t i = 0; i < V * V; ++i) t[i] = static_cast<Real>(counts_[i]);
  if (!ppmi) return t;
  std::vector<double> row(V, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = 0; b < V; ++b) row[a] += static_cast<double>(counts_[a * V + b]);
    total += row[a];
  }
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = 0; b < V; ++b) {
      const double m = static_cast<double>(counts_[a * V + b]);
      double v = 0.0;
      if (m > 0.0) v = std::max(0.0, std::log(m * total / (row[a] * row[b])));
      t[a * V + b] = static_cast<Real>(v);
    }
  }
  return t;
}

CooccurrenceMatrix Cooccurrence(std::span<const TokenId> ids, std::size_t window,
                                std::size_t vocab_size) {
  if (window < 2) Fail(ErrorKind::kConfig, "cooccurrence: window must be >= 2");
  if (ids.size() < window) {
    Fail(ErrorKind::kData, "cooccurrence: sequence shorter than the window");
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      Fail(ErrorKind::kData, "cooccurrence: id " + std::to_string(id) + " outside vocabulary");
    }
  }
  CooccurrenceMatrix m(vocab_size, window);
  std::vector<TokenId> distinct;
  for (std::size_t s = 0; s + window <= ids.size(); ++s) {
    distinct.assign(ids.begin() + s, ids.begin() + s + window);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (TokenId a : distinct) {
      for (TokenId b : distinct) ++m.at(a, b);
    }
  }
  return m;
}

Embedding PcaEmbed(const Tensor& matrix, std::size_t p) {
  if (matrix.rank() != 2 || matrix.rows() != matrix.cols()) {
    Fail(ErrorKind::kDimension, "pca_embed: expected a square matrix, got " +
                                    matrix.ShapeString());
  }
  const std::size_t V = matrix.rows();
  if (p < 1 || p > V) {
    Fail(ErrorKind::kConfig, "pca_embed: target dimension " + std::to_string(p) +
                                 " outside [1, " + std::to_string(V) + "]");
  }
  Eigen::MatrixXd m(V, V);
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = 0; b < V; ++b) {
      m(a, b) = 0.5 * (matrix.at(a, b) + matrix.at(b, a));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "pca_embed: eigensolver did not converge on a " << V << "x" << V
       << " matrix (Frobenius norm " << m.norm() << ", max |entry| " << m.cwiseAbs().maxCoeff()
       << ")";
    Fail(ErrorKind::kNumeric, os.str());
  }
  // Eigen returns ascending eigenvalues; take the top p.
  Embedding e{Tensor({V, p})};
  for (std::size_t r = 0; r < p; ++r) {
    const Eigen::Index col = static_cast<Eigen::Index>(V - 1 - r);
    const double scale = std::sqrt(std::max(0.0, solver.eigenvalues()(col)));
    for (std::size_t w = 0; w < V; ++w) {
      e.vectors.at(w, r) =
          static_cast<Real>(scale * solver.eigenvectors()(static_cast<Eigen::Index>(w), col));
    }
  }
  return e;
}

Embedding PcaEmbed(const CooccurrenceMatrix& m, std::size_t p, bool ppmi) {
  return PcaEmbed(m.ToTensor(ppmi), p);
}

double ReconstructionError(const Tensor& matrix, const Embedding& e) {
  const std::size_t V = matrix.rows();
  if (e.vocab_size() != V) Fail(ErrorKind::kDimension, "reconstruction: vocabulary mismatch");
  double err = 0.0;
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t b = 0; b < V; ++b) {
      double g = 0.0;
      for (std::size_t r = 0; r < e.dim(); ++r) g += e.vectors.at(a, r) * e.vectors.at(b, r);
      const double d = g - matrix.at(a, b);
      err += d * d;
    }
  }
  return err;
}

TokenId Analogy(const Embedding& e, TokenId a, TokenId b, TokenId c,
                const std::set<TokenId>& exclude) {
  const std::size_t V = e.vocab_size();
  for (TokenId w : {a, b, c}) {
    if (w < 0 || static_cast<std::size_t>(w) >= V) {
      Fail(ErrorKind::kData, "analogy: word id " + std::to_string(w) + " not in vocabulary");
    }
  }
  std::size_t excluded_in_vocab = 0;
  for (TokenId w : exclude) {
    if (w >= 0 && static_cast<std::size_t>(w) < V) ++excluded_in_vocab;
  }
  if (excluded_in_vocab >= V) {
    Fail(ErrorKind::kData, "analogy: every word is excluded; no candidate remains");
  }
  const std::size_t p = e.dim();
  std::vector<double> query(p);
  for (std::size_t r = 0; r < p; ++r) query[r] = e.Of(a)[r] - e.Of(b)[r] + e.Of(c)[r];
  TokenId best = -1;
  double best_score = 0.0;
  for (std::size_t w = 0; w < V; ++w) {
    if (exclude.contains(static_cast<TokenId>(w))) continue;
    double s = 0.0;
    for (std::size_t r = 0; r < p; ++r) s += query[r] * e.vectors.at(w, r);
    if (best < 0 || s > best_score) {
      best = static_cast<TokenId>(w);
      best_score = s;
    }
  }
  return best;
}

std::vector<double> Decode(std::span<const Real> v, const Embedding& e, double temperature) {
  if (!(temperature > 0.0)) Fail(ErrorKind::kConfig, "decode: temperature must be > 0");
  if (v.size() != e.dim()) {
    Fail(ErrorKind::kDimension, "decode: vector of dim " + std::to_string(v.size()) +
                                    " vs embedding dim " + std::to_string(e.dim()));
  }
  Tensor scores({e.vocab_size()});
  for (std::size_t w = 0; w < e.vocab_size(); ++w) {
    double s = 0.0;
    for (std::size_t r = 0; r < v.size(); ++r) s += v[r] * e.vectors.at(w, r);
    scores[w] = static_cast<Real>(s);
  }
  Tape tape;
  const Var probs = Softmax(tape.Constant(std::move(scores)), static_cast<Real>(1.0 / temperature));
  return std::vector<double>(probs.value().data().begin(), probs.value().data().end());
}

}  // namespace lmlab
