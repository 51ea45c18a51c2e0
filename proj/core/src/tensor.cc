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

#include "lmlab/tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

namespace lmlab {

std::size_t ShapeProduct(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(ShapeProduct(shape_), Real{0}) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (ShapeProduct(shape_) != data_.size()) {
    Fail(ErrorKind::kDimension, "Tensor: shape " + ShapeToString(shape_) + " needs " +
                                    std::to_string(ShapeProduct(shape_)) +
                                    " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::Scalar(Real value) { return Tensor({1}, {value}); }

Tensor Tensor::Vector(std::vector<Real> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<Real> values) {
  return Tensor({rows, cols}, std::vector<Real>(values));
}

Tensor Tensor::Filled(std::vector<std::size_t> shape, Real value) {
  Tensor t(std::move(shape));
  t.Fill(value);
  return t;
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  if (shape_.size() == 1) return 1;
  Fail(ErrorKind::kDimension, "Tensor::rows on rank " + std::to_string(rank()));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  Fail(ErrorKind::kDimension, "Tensor::cols on rank " + std::to_string(rank()));
}

bool Tensor::AllFinite() const {
  for (Real v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::Fill(Real value) {
  for (Real& v : data_) v = value;
}

std::string Tensor::ShapeString() const { return ShapeToString(shape_); }

void CheckSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.SameShape(b)) {
    Fail(ErrorKind::kDimension, std::string(op) + ": shape mismatch " + a.ShapeString() +
                                    " vs " + b.ShapeString());
  }
}

void GemmNN(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real{0}) continue;
      const Real* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void GemmNT(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    Real* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* brow = b + j * k;
      Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += arow[p] * brow[p];
        s1 += arow[p + 1] * brow[p + 1];
        s2 += arow[p + 2] * brow[p + 2];
        s3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p) s0 += arow[p] * brow[p];
      crow[j] += (s0 + s1) + (s2 + s3);
    }
  }
}

void GemmTN(std::size_t m, std::size_t k, std::size_t n, const Real* a, const Real* b,
            Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = arow[p];
      if (av == Real{0}) continue;
      Real* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    Fail(ErrorKind::kDimension,
         "matmul: incompatible shapes " + a.ShapeString() + " and " + b.ShapeString());
  }
  Tensor c({a.rows(), b.cols()});
  GemmNN(a.rows(), a.cols(), b.cols(), a.data().data(), b.data().data(), c.data().data());
  return c;
}

Tensor Transpose(const Tensor& a) {
  Tensor t({a.cols(), a.rows()});
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) t.at(c, r) = a.at(r, c);
  }
  return t;
}

}  // namespace lmlab
