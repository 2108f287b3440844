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

#ifndef CAR_STATS_H_
#define CAR_STATS_H_

#include <functional>

namespace car {

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
double AdaptiveSimpson(const std::function<double(double)>& f, double a,
                       double b, double tol);

// I_x(a, b) for a, b > 0 and x in [0, 1], by adaptive quadrature of the beta
// density to absolute tolerance 1e-9 or better.
double RegularizedIncompleteBeta(double a, double b, double x);

// P(|T| >= |t|) for T ~ Student-t with `df` degrees of freedom.
double StudentTTwoSidedP(double t, double df);

// Exact two-sided sign test: probability under Binomial(n, 1/2) of a split at
// least as unbalanced as (positives, n - positives).
double SignTestP(int positives, int n);

}  // namespace car

#endif  // CAR_STATS_H_
