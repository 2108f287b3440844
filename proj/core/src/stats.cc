// Copyright 2026 The carlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "car/stats.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace car {
namespace {

constexpr int kMaxDepth = 50;

double SimpsonStep(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth >= kMaxDepth || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return SimpsonStep(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         SimpsonStep(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double LogBeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// I_x(a, b) for x <= a / (a + b). The substitution v = u^a flattens the
// u^(a-1) endpoint singularity; (1 - u)^(b-1) stays bounded because x is
// kept away from 1.
double IncompleteBetaLower(double a, double b, double x) {
  const double beta = std::exp(LogBeta(a, b));
  const double upper = std::pow(x, a);
  auto integrand = [a, b](double v) {
    return std::pow(1.0 - std::pow(v, 1.0 / a), b - 1.0);
  };
  const double tol = 1e-12 * a * beta;
  const double integral = AdaptiveSimpson(integrand, 0.0, upper, tol);
  return integral / (a * beta);
}

}  // namespace

double AdaptiveSimpson(const std::function<double(double)>& f, double a,
                       double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return SimpsonStep(f, a, b, fa, fm, fb, whole, tol, 0);
}

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("incomplete beta requires a, b > 0");
  }
  if (std::isnan(x)) throw std::domain_error("incomplete beta: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double value = x <= a / (a + b)
                           ? IncompleteBetaLower(a, b, x)
                           : 1.0 - IncompleteBetaLower(b, a, 1.0 - x);
  return std::clamp(value, 0.0, 1.0);
}

double StudentTTwoSidedP(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("degrees of freedom must be > 0");
  if (std::isnan(t)) throw std::domain_error("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return RegularizedIncompleteBeta(0.5 * df, 0.5, x);
}

double SignTestP(int positives, int n) {
  if (n < 0 || positives < 0 || positives > n) {
    throw std::invalid_argument("sign test requires 0 <= positives <= n");
  }
  if (n == 0) return 1.0;
  const int tail = std::min(positives, n - positives);
  double cumulative = 0.0;
  for (int k = 0; k <= tail; ++k) {
    cumulative += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                           std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return std::min(1.0, 2.0 * cumulative);
}

}  // namespace car
