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

#ifndef LMLAB_EMBED_H_
#define LMLAB_EMBED_H_

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "lmlab/tensor.h"

namespace lmlab {

// Symmetric |W| x |W| counts of length-N windows containing both words.
// Diagonal convention: M(w, w) counts the windows containing w at least once.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix(std::size_t vocab_size, std::size_t window)
      : vocab_size_(vocab_size), window_(window), counts_(vocab_size * vocab_size, 0) {}

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t window() const { return window_; }
  std::uint64_t at(TokenId a, TokenId b) const {
    return counts_[static_cast<std::size_t>(a) * vocab_size_ + static_cast<std::size_t>(b)];
  }
  std::uint64_t& at(TokenId a, TokenId b) {
    return counts_[static_cast<std::size_t>(a) * vocab_size_ + static_cast<std::size_t>(b)];
  }
  // Real-valued copy; with ppmi, entries become max(0, log(M T / (r_a r_b))).
  Tensor ToTensor(bool ppmi = false) const;

 private:
  std::size_t vocab_size_;
  std::size_t window_;
  std::vector<std::uint64_t> counts_;
};

CooccurrenceMatrix Cooccurrence(std::span<const TokenId> ids, std::size_t window,
                                std::size_t vocab_size);

// Word embedding iota: row w of `vectors` is iota(w), of dimension p.
struct Embedding {
  Tensor vectors;  // |W| x p

  std::size_t dim() const { return vectors.cols(); }
  std::size_t vocab_size() const { return vectors.rows(); }
  std::span<const Real> Of(TokenId w) const { return vectors.row(static_cast<std::size_t>(w)); }
};

// Rank-p factorisation Z^T Z of the symmetrised matrix: Z = diag(sqrt(lambda))
// times the top-p eigenvectors, negative eigenvalues clamped to zero. Column w
// of Z becomes iota(w).
Embedding PcaEmbed(const Tensor& matrix, std::size_t p);
Embedding PcaEmbed(const CooccurrenceMatrix& m, std::size_t p, bool ppmi = false);

// tr((Z^T Z - M)^2), the objective the PCA embedding minimises.
double ReconstructionError(const Tensor& matrix, const Embedding& e);

// argmax over w not in `exclude` of (iota(a) - iota(b) + iota(c)) . iota(w);
// ties go to the lowest id.
TokenId Analogy(const Embedding& e, TokenId a, TokenId b, TokenId c,
                const std::set<TokenId>& exclude);

// P(w) proportional to exp(v . iota(w) / T).
std::vector<double> Decode(std::span<const Real> v, const Embedding& e, double temperature);

}  // namespace lmlab

#endif  // LMLAB_EMBED_H_
