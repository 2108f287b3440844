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

#include <cmath>

#include "gtest/gtest.h"

namespace car {
namespace {

// Two-sided Student-t p-values computed with 50-digit arithmetic.
struct Reference {
  double df;
  double t;
  double p;
};
constexpr Reference kReference[] = {
    {2, 0.5, 0.66666666666666667},   {2, 1, 0.42264973081037424},
    {2, 2, 0.18350341907227397},     {2, 5, 0.037749551350623726},
    {5, 0.5, 0.63829887164092901},   {5, 1, 0.36321746764912263},
    {5, 2, 0.10193947882985836},     {5, 5, 0.0041047159800533224},
    {10, 0.5, 0.62789360574297294},  {10, 1, 0.34089313230205987},
    {10, 2, 0.073388034770740366},   {10, 5, 0.00053733360275645262},
};

TEST(StudentTTest, MatchesHighPrecisionTable) {
  for (const Reference& r : kReference) {
    EXPECT_NEAR(StudentTTwoSidedP(r.t, r.df), r.p, 1e-9)
        << "df=" << r.df << " t=" << r.t;
    EXPECT_NEAR(StudentTTwoSidedP(-r.t, r.df), r.p, 1e-9);
  }
}

TEST(StudentTTest, TwoDegreesOfFreedomClosedForm) {
  for (double t = 0.0; t < 30.0; t += 0.37) {
    EXPECT_NEAR(StudentTTwoSidedP(t, 2), 1.0 - t / std::sqrt(t * t + 2.0),
                1e-10);
  }
}

TEST(StudentTTest, EdgeValues) {
  EXPECT_EQ(StudentTTwoSidedP(0.0, 4), 1.0);
  EXPECT_EQ(StudentTTwoSidedP(INFINITY, 4), 0.0);
}

TEST(IncompleteBetaTest, KnownValuesAndSymmetry) {
  EXPECT_NEAR(RegularizedIncompleteBeta(1, 1, 0.3), 0.3, 1e-12);
  EXPECT_NEAR(RegularizedIncompleteBeta(2, 1, 0.3), 0.09, 1e-12);
  EXPECT_NEAR(RegularizedIncompleteBeta(0.5, 0.5, 0.5), 0.5, 1e-10);
  for (double x : {0.05, 0.3, 0.7, 0.95}) {
    EXPECT_NEAR(RegularizedIncompleteBeta(2.5, 0.5, x),
                1.0 - RegularizedIncompleteBeta(0.5, 2.5, 1.0 - x), 1e-10);
  }
  EXPECT_EQ(RegularizedIncompleteBeta(3, 4, 0.0), 0.0);
  EXPECT_EQ(RegularizedIncompleteBeta(3, 4, 1.0), 1.0);
}

TEST(AdaptiveSimpsonTest, IntegratesSmoothFunctions) {
  EXPECT_NEAR(AdaptiveSimpson([](double x) { return std::sin(x); }, 0.0,
                              M_PI, 1e-12),
              2.0, 1e-10);
}

TEST(SignTestTest, TwoSidedBinomial) {
  EXPECT_NEAR(SignTestP(10, 10), 2.0 / 1024.0, 1e-15);
  EXPECT_NEAR(SignTestP(0, 10), 2.0 / 1024.0, 1e-15);
  EXPECT_EQ(SignTestP(5, 10), 1.0);
  EXPECT_NEAR(SignTestP(9, 10), 22.0 / 1024.0, 1e-15);
  EXPECT_EQ(SignTestP(0, 0), 1.0);
}

}  // namespace
}  // namespace car
