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

#ifndef LMLAB_SCALING_H_
#define LMLAB_SCALING_H_

#include <iosfwd>
#include <span>
#include <vector>

namespace lmlab {

struct ScalingPoint {
  double params = 0;  // P
  double tokens = 0;  // D, may be +inf
  double loss = 0;
};

// L(P, D) = [ (P_c / P)^(alpha_P / alpha_D) + D_c / D ]^alpha_D
struct ScalingFit {
  double alpha_p = 0;
  double alpha_d = 0;
  double p_c = 0;
  double d_c = 0;
  double residual = 0;  // sum of squared log-loss residuals
  double rmse = 0;      // root mean squared log-loss residual
  bool pure_power_law = false;  // every D infinite: L = (P_c / P)^alpha_P
  std::size_t iterations = 0;   // refinement iterations
};

double ScalingLaw(const ScalingFit& fit, double params, double tokens);

// Least squares on log L. A grid over (alpha_P, alpha_D) with the linear
// coefficients solved at each node seeds a Levenberg-Marquardt refinement.
// Needs at least 6 points spanning a decade in P and, unless every D is
// infinite, a decade in the finite D values.
ScalingFit FitScaling(std::span<const ScalingPoint> points);

// CSV with header "params,tokens,loss"; "inf" marks an unlimited dataset.
std::vector<ScalingPoint> ReadScalingCsv(std::istream& in);
void WriteScalingCsv(std::ostream& out, std::span<const ScalingPoint> points);

}  // namespace lmlab

#endif  // LMLAB_SCALING_H_
