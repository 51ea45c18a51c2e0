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

#include "lmlab/scaling.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "lmlab/config_text.h"
#include "lmlab/error.h"

namespace lmlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double LogAddExp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

struct LogData {
  std::vector<double> log_p;
  std::vector<double> log_inv_d;  // -inf for infinite D
  std::vector<double> log_l;
};

// x = (log alpha_P, log alpha_D, log P_c, log D_c); residual = model - log L.
struct LawFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const LogData* data;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(data->log_l.size()); }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const double ap = std::exp(x[0]), ad = std::exp(x[1]), rho = ap / ad;
    for (int k = 0; k < values(); ++k) {
      const double la = rho * (x[2] - data->log_p[k]);
      const double lb = x[3] + data->log_inv_d[k];
      f[k] = ad * LogAddExp(la, lb) - data->log_l[k];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    const double ap = std::exp(x[0]), ad = std::exp(x[1]), rho = ap / ad;
    for (int k = 0; k < values(); ++k) {
      const double u = x[2] - data->log_p[k];
      const double la = rho * u;
      const double lb = x[3] + data->log_inv_d[k];
      const double ls = LogAddExp(la, lb);
      const double fa = std::exp(la - ls);
      const double fb = lb == -kInf ? 0.0 : std::exp(lb - ls);
      j(k, 0) = ad * fa * u * rho;
      j(k, 1) = ad * ls - ad * fa * u * rho;
      j(k, 2) = ad * fa * rho;
      j(k, 3) = ad * fb;
    }
    return 0;
  }
};

double SumSquares(const LawFunctor& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd r(f.values());
  f(x, r);
  const double s = r.squaredNorm();
  return std::isfinite(s) ? s : kInf;
}

// Linear solve for (P_c, D_c) at fixed exponents, in rescaled coordinates.
std::optional<Eigen::VectorXd> SeedAt(const LogData& d, double ap, double ad) {
  const std::size_t n = d.log_l.size();
  const double rho = ap / ad;
  const double lp_min = *std::min_element(d.log_p.begin(), d.log_p.end());
  const double lid_max = *std::max_element(d.log_inv_d.begin(), d.log_inv_d.end());
  double ly_max = -kInf;
  for (double ll : d.log_l) ly_max = std::max(ly_max, ll / ad);
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t k = 0; k < n; ++k) {
    a(k, 0) = std::exp(-rho * (d.log_p[k] - lp_min));
    a(k, 1) = d.log_inv_d[k] == -kInf ? 0.0 : std::exp(d.log_inv_d[k] - lid_max);
    y[k] = std::exp(d.log_l[k] / ad - ly_max);
  }
  if (!a.allFinite() || !y.allFinite()) return std::nullopt;
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  if (!c.allFinite()) return std::nullopt;
  const double c1 = std::max(c[0], 1e-12);
  const double c2 = std::max(c[1], 1e-12);
  Eigen::VectorXd x(4);
  x[0] = std::log(ap);
  x[1] = std::log(ad);
  x[2] = (std::log(c1) + ly_max + rho * lp_min) / rho;
  x[3] = std::log(c2) + ly_max - lid_max;
  return x;
}

double Decades(const std::vector<double>& logs) {
  double lo = kInf, hi = -kInf;
  for (double v : logs) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > hi ? 0.0 : (hi - lo) / std::log(10.0);
}

[[noreturn]] void SpanError(const std::string& what) {
  Fail(ErrorKind::kNumeric,
       "scaling fit: " + what +
           "; the fit needs at least 6 points spanning at least one decade in both P and D "
           "(or in P alone when every D is infinite)");
}

ScalingFit FitPowerLaw(const LogData& d) {
  const std::size_t n = d.log_l.size();
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t k = 0; k < n; ++k) {
    a(k, 0) = 1.0;
    a(k, 1) = d.log_p[k];
    y[k] = d.log_l[k];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  ScalingFit fit;
  fit.pure_power_law = true;
  fit.alpha_p = -c[1];
  fit.alpha_d = 0;
  fit.p_c = std::exp(c[0] / fit.alpha_p);
  fit.d_c = 0;
  fit.residual = (a * c - y).squaredNorm();
  fit.rmse = std::sqrt(fit.residual / static_cast<double>(n));
  return fit;
}

}  // namespace

double ScalingLaw(const ScalingFit& fit, double params, double tokens) {
  if (fit.pure_power_law) return std::pow(fit.p_c / params, fit.alpha_p);
  const double inner =
      std::pow(fit.p_c / params, fit.alpha_p / fit.alpha_d) + fit.d_c / tokens;
  return std::pow(inner, fit.alpha_d);
}

ScalingFit FitScaling(std::span<const ScalingPoint> points) {
  if (points.size() < 6) SpanError("only " + std::to_string(points.size()) + " points given");
  LogData d;
  bool all_infinite = true;
  for (const auto& p : points) {
    if (!(p.params > 0) || !(p.tokens > 0) || !(p.loss > 0) || !std::isfinite(p.params) ||
        !std::isfinite(p.loss)) {
      Fail(ErrorKind::kData, "scaling fit: P, D and loss must be positive and finite (D may be inf)");
    }
    d.log_p.push_back(std::log(p.params));
    d.log_inv_d.push_back(std::isinf(p.tokens) ? -kInf : -std::log(p.tokens));
    d.log_l.push_back(std::log(p.loss));
    all_infinite = all_infinite && std::isinf(p.tokens);
  }
  if (Decades(d.log_p) < 1.0) SpanError("P spans less than one decade");
  if (all_infinite) return FitPowerLaw(d);
  if (Decades(d.log_inv_d) < 1.0) SpanError("D spans less than one decade");

  // Coarse grid, log-spaced exponents in [0.005, 2].
  constexpr int kGrid = 48;
  struct Candidate {
    double ss;
    Eigen::VectorXd x;
  };
  std::vector<Candidate> seeds;
  const LawFunctor functor{&d};
  for (int i = 0; i < kGrid; ++i) {
    const double ap = 0.005 * std::pow(400.0, i / double(kGrid - 1));
    for (int j = 0; j < kGrid; ++j) {
      const double ad = 0.005 * std::pow(400.0, j / double(kGrid - 1));
      auto x = SeedAt(d, ap, ad);
      if (!x) continue;
      const double ss = SumSquares(functor, *x);
      if (std::isfinite(ss)) seeds.push_back({ss, *x});
    }
  }
  if (seeds.empty()) Fail(ErrorKind::kNumeric, "scaling fit: no finite starting point on the grid");
  std::sort(seeds.begin(), seeds.end(),
            [](const Candidate& a, const Candidate& b) { return a.ss < b.ss; });
  seeds.resize(std::min<std::size_t>(seeds.size(), 6));

  ScalingFit best;
  best.residual = kInf;
  for (auto& seed : seeds) {
    Eigen::VectorXd x = seed.x;
    LawFunctor f{&d};
    Eigen::LevenbergMarquardt<LawFunctor> lm(f);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.maxfev = 4000;
    lm.minimize(x);
    const double ss = SumSquares(f, x);
    if (!(ss < best.residual)) continue;
    best.residual = ss;
    best.alpha_p = std::exp(x[0]);
    best.alpha_d = std::exp(x[1]);
    best.p_c = std::exp(x[2]);
    best.d_c = std::exp(x[3]);
    best.iterations = static_cast<std::size_t>(lm.iter);
  }
  if (!std::isfinite(best.residual)) {
    Fail(ErrorKind::kNumeric, "scaling fit: refinement did not produce a finite residual");
  }
  best.rmse = std::sqrt(best.residual / static_cast<double>(points.size()));
  return best;
}

std::vector<ScalingPoint> ReadScalingCsv(std::istream& in) {
  std::vector<ScalingPoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find("params") != std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell, ',')) {
        Fail(ErrorKind::kData, "scaling csv line " + std::to_string(line_no) +
                                   ": expected params,tokens,loss");
      }
      char* end = nullptr;
      v[c] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        Fail(ErrorKind::kData, "scaling csv line " + std::to_string(line_no) + ": bad number '" +
                                   cell + "'");
      }
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

void WriteScalingCsv(std::ostream& out, std::span<const ScalingPoint> points) {
  out << "params,tokens,loss\n";
  for (const auto& p : points) {
    out << FormatDouble(p.params) << "," << (std::isinf(p.tokens) ? "inf" : FormatDouble(p.tokens))
        << "," << FormatDouble(p.loss) << "\n";
  }
}

}  // namespace lmlab
