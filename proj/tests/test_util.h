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

#ifndef LMLAB_TESTS_TEST_UTIL_H_
#define LMLAB_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lmlab/model.h"
#include "lmlab/ops.h"
#include "lmlab/rng.h"
#include "lmlab/tape.h"

namespace lmlab::testing {

inline Tensor RandomTensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) x = static_cast<Real>(rng.Normal(0.0, scale));
  return t;
}

inline std::string FormatG(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheck {
  double max_rel = 0;
  std::size_t coords = 0;
  std::string worst;  // "input i coordinate k: analytic a vs numeric n"
};

// Compares tape gradients of f with central differences on every coordinate
// of every input. Relative error is |a - n| / max(|a|, |n|, floor * max(1, |f|)):
// central differences carry roundoff of order eps |f| / h, so gradient entries
// below that resolution are compared on an absolute scale tied to |f|.
inline GradCheck CheckGradients(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5,
                                double floor = 1e-6) {
  std::vector<Tensor> analytic;
  double scale = 1;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.Leaf(t));
    Var loss = f(tape, vars);
    scale = std::max(1.0, std::abs(static_cast<double>(loss.value().data()[0])));
    tape.Backward(loss);
    for (const auto& v : vars) analytic.push_back(tape.grad(v));
  }
  auto eval = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.Leaf(t, false));
    return static_cast<double>(f(tape, vars).value().data()[0]);
  };
  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const Real saved = inputs[i].data()[k];
      inputs[i].data()[k] = saved + h;
      const double up = eval();
      inputs[i].data()[k] = saved - h;
      const double down = eval();
      inputs[i].data()[k] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i].data()[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor * scale});
      ++out.coords;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        out.worst = "input " + std::to_string(i) + " coordinate " + std::to_string(k) +
                    ": analytic " + FormatG(a) + " vs numeric " + FormatG(numeric);
      }
    }
  }
  return out;
}

// Reduces a tensor-valued op to a scalar with fixed random weights so every
// output coordinate influences the check.
inline Var WeightedSum(Var x, Rng& rng) {
  Tensor w(x.value().shape());
  for (auto& v : w.data()) v = static_cast<Real>(rng.Normal());
  return Sum(Mul(x, x.tape()->Constant(std::move(w))));
}

// Overwrites every parameter, biases included, with N(0, scale^2) draws.
inline void RandomizeParams(NeuralModel& model, Rng& rng, double scale = 0.5) {
  for (auto& p : model.params()) {
    for (auto& x : p.value.data()) x = static_cast<Real>(rng.Normal(0.0, scale));
  }
}

// Cross-entropy of the model on `inputs` (whole blocks of seq_len) against
// `targets`, differentiated with respect to every parameter.
inline GradCheck CheckModelGradients(const NeuralModel& model, std::span<const TokenId> inputs,
                                     std::span<const TokenId> targets, std::size_t seq_len) {
  std::vector<Tensor> values;
  for (const auto& p : model.params()) values.push_back(p.value);
  std::vector<TokenId> in(inputs.begin(), inputs.end()), tg(targets.begin(), targets.end());
  auto f = [&model, in, tg, seq_len](Tape& tape, std::span<const Var> vars) {
    return CrossEntropy(model.Forward(tape, vars, in, seq_len), tg);
  };
  return CheckGradients(f, std::move(values));
}

}  // namespace lmlab::testing

#endif  // LMLAB_TESTS_TEST_UTIL_H_
