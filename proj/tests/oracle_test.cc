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


#include "car/oracle.h"

#include <cmath>

#include "gtest/gtest.h"

namespace car {
namespace {

RewardSpec Spec(RewardFamily family) {
  RewardSpec spec;
  spec.family = family;
  return spec;
}

TEST(ExpectedRewardTest, WorkedValues) {
  EXPECT_EQ(ExpectedReward(Spec(WeightedBrier{1.0}), 1.0, 1.0), 1.0);
  EXPECT_EQ(ExpectedReward(Spec(Mscr{}), 0.0, 0.0), 0.0);
  EXPECT_NEAR(ExpectedReward(Spec(WeightedBrier{1.0}), 0.5, 0.5), 0.25,
              1e-15);
  EXPECT_THROW(ExpectedReward(Spec(Mscr{}), 1.2, 0.5), std::domain_error);
  EXPECT_THROW(ExpectedReward(Spec(Mscr{}), 0.5, -0.1), std::domain_error);
}

TEST(ExpectedRewardTest, AffineInBelief) {
  const RewardSpec spec = Spec(Mscr{0.7, 1.9});
  for (double q : {0.0, 0.35, 1.0}) {
    const double r0 = ExpectedReward(spec, 0.0, q);
    const double r1 = ExpectedReward(spec, 1.0, q);
    for (double p : {0.2, 0.5, 0.9}) {
      EXPECT_NEAR(ExpectedReward(spec, p, q), (1 - p) * r0 + p * r1, 1e-12);
    }
  }
}

TEST(OptimalConfidenceTest, GridExamples) {
  EXPECT_NEAR(OptimalConfidenceGrid(Spec(WeightedBrier{}), 0.3).q, 0.3,
              1e-12);
  EXPECT_NEAR(OptimalConfidenceGrid(Spec(Mscr{}), 0.7).q, 0.7, 1e-12);
  EXPECT_NEAR(OptimalConfidenceGrid(Spec(Mscr{1.0, 3.0}), 0.5).q, 0.25,
              1e-12);
  const GridOptimum flat = OptimalConfidenceGrid(Spec(EmOnly{}), 0.5);
  EXPECT_TRUE(flat.flat);
  EXPECT_EQ(flat.q, 0.0);
  EXPECT_TRUE(OptimalConfidenceGrid(Spec(WeightedBrier{0.0}), 0.5).flat);
}

TEST(OptimalConfidenceTest, ClosedForms) {
  EXPECT_EQ(OptimalConfidenceClosed(Spec(WeightedBrier{1.0}), 0.42), 0.42);
  EXPECT_FALSE(OptimalConfidenceClosed(Spec(EmOnly{}), 0.5).has_value());
  EXPECT_FALSE(
      OptimalConfidenceClosed(Spec(WeightedBrier{0.0}), 0.5).has_value());
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    EXPECT_NEAR(*OptimalConfidenceClosed(Spec(Mscr{0.8, 0.8}), p), p, 1e-12);
  }
}

TEST(OptimalConfidenceTest, GridAgreesWithClosedForm) {
  const std::vector<RewardFamily> families = {
      WeightedBrier{0.1}, WeightedBrier{1.0}, Mscr{0.5, 0.5}, Mscr{1.0, 3.0},
      Mscr{2.0, 0.5}};
  for (const RewardFamily& f : families) {
    for (int k = 0; k <= 20; ++k) {
      const double p = k / 20.0;
      const double grid = OptimalConfidenceGrid(Spec(f), p).q;
      const double closed = *OptimalConfidenceClosed(Spec(f), p);
      EXPECT_LE(std::abs(grid - closed), 0.001 + 1e-12)
          << FamilyName(f) << " p=" << p;
    }
  }
}

TEST(ProprietyCheckTest, BrierAndSymmetricMscrAreProper) {
  for (double lambda : {0.1, 1.0 / 3.0, 1.0, 3.0}) {
    const IncentiveProfile profile =
        ProprietyCheck(Spec(WeightedBrier{lambda}));
    EXPECT_TRUE(profile.proper) << lambda;
    EXPECT_EQ(profile.points.size(), 21u);
  }
  for (double beta : {0.25, 0.5, 1.0}) {
    EXPECT_TRUE(ProprietyCheck(Spec(Mscr{beta, beta})).proper) << beta;
  }
}

TEST(ProprietyCheckTest, AsymmetricMscrIsImproper) {
  const IncentiveProfile profile = ProprietyCheck(Spec(Mscr{1.0, 3.0}));
  EXPECT_FALSE(profile.proper);
  EXPECT_NEAR(profile.max_truthfulness_gap, 0.268, 0.01);
  EXPECT_GT(profile.gap_argmax_p, 0.4);
  EXPECT_LT(profile.gap_argmax_p, 0.8);
  const IncentiveProfile flat = ProprietyCheck(Spec(EmOnly{}));
  EXPECT_TRUE(flat.flat);
  EXPECT_FALSE(flat.proper);
}

TEST(ProprietyCheckTest, PositiveMarginBeatsCertainWrongAnswer) {
  for (const RewardFamily& f :
       std::vector<RewardFamily>{WeightedBrier{1.0 / 3.0}, Mscr{}}) {
    const RewardSpec spec = Spec(f);
    ASSERT_GT(RewardMargin(spec), 0.0);
    const double best_wrong = OptimalConfidenceGrid(spec, 0.0).expected_reward;
    for (int k = 1; k <= 20; ++k) {
      EXPECT_GT(OptimalConfidenceGrid(spec, k / 20.0).expected_reward,
                best_wrong);
    }
  }
}

}  // namespace
}  // namespace car
