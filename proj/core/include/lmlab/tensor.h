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

#ifndef LMLAB_TENSOR_H_
#define LMLAB_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "lmlab/error.h"

namespace lmlab {

using TokenId = std::int32_t;

// Dense row-major array of reals. Shapes never broadcast implicitly.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<Real> data);

  static Tensor Scalar(Real value);
  static Tensor Vector(std::vector<Real> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<Real> values);
  static Tensor Filled(std::vector<std::size_t> shape, Real value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors; a rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  std::vector<Real>& storage() { return data_; }

  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  void Fill(Real value);
  std::string ShapeString() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Real> data_;
};

std::string ShapeToString(const std::vector<std::size_t>& shape);
std::size_t ShapeProduct(const std::vector<std::size_t>& shape);

// Throws kDimension naming both shapes when they differ.
void CheckSameShape(const Tensor& a, const Tensor& b, const char* op);

// Raw kernels shared by ops and by code that does not need a tape.
// C (m x n) += A (m x k) * B (k x n)
void GemmNN(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c);
// C (m x n) += A (m x k) * B^T, with B stored (n x k)
void GemmNT(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c);
// C (k x n) += A^T * B, with A stored (m x k) and B stored (m x n)
void GemmTN(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c);

Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

}  // namespace lmlab

#endif  // LMLAB_TENSOR_H_
